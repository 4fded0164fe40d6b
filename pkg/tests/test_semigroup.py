"""Diffusion sampler, semigroup routes, and the inequality harness."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nilheat.groups import GroupPoint, block_norms_sq_flat, multiply_flat
from nilheat.distance import distance_squared_arrays
from nilheat.kernel import QuadratureSpec, kernel_zsq
from nilheat.sampling import philox
from nilheat.semigroup import (
    DiffusionSpec,
    TransformedField,
    ball_mean,
    check_cheeger,
    check_commutation,
    check_holder_corollary,
    check_integration_by_parts,
    check_li_inequality,
    check_log_sobolev_poincare,
    check_translation_dilation_reduction,
    grad_semigroup,
    grad_semigroup_components,
    hgrad_norm_of,
    right_field_of,
    sample_heat_points,
    semigroup_apply,
    semigroup_estimate,
)
from nilheat.testfuncs import TestFunction, indicator_like, linear_bump, standard_family

SPEC = DiffusionSpec(steps=150, paths=12000, seed=77)


def test_sampler_z_moments(any_group):
    params = any_group
    for h in (0.25, 1.0):
        W = sample_heat_points(params, h, SPEC)
        zsq = np.sum(W[:, : 2 * params.n] ** 2, axis=-1)
        se = float(np.std(zsq) / math.sqrt(zsq.size))
        assert abs(float(np.mean(zsq)) - 4.0 * params.n * h) <= 3.0 * se


def test_sampler_small_h_concentration(h1):
    means = []
    for h in (0.1, 0.02):
        W = sample_heat_points(h1, h, SPEC)
        means.append(float(np.mean(np.sum(W[:, :2] ** 2, axis=-1))))
    # mean |z|^2 scales linearly in h
    assert means[1] / means[0] == pytest.approx(0.2, rel=0.15)


def test_sampler_determinism_and_workers(noniso):
    a = sample_heat_points(noniso, 0.7, DiffusionSpec(steps=120, paths=9000, seed=5, chunk=2048))
    b = sample_heat_points(noniso, 0.7, DiffusionSpec(steps=120, paths=9000, seed=5, chunk=2048))
    c = sample_heat_points(
        noniso, 0.7, DiffusionSpec(steps=120, paths=9000, seed=5, chunk=2048, workers=3)
    )
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_sampler_histogram_matches_kernel(h1):
    # coarse 3d histogram against bin-integrated kernel values, 10 percent
    spec = DiffusionSpec(steps=300, paths=100000, seed=12)
    W = sample_heat_points(h1, 1.0, spec)
    edges_xy = np.linspace(-1.5, 1.5, 7)
    edges_t = np.linspace(-2.0, 2.0, 7)
    hist, _ = np.histogramdd(W, bins=(edges_xy, edges_xy, edges_t))
    prob = hist / W.shape[0]
    gl_x, gl_w = np.polynomial.legendre.leggauss(5)
    qspec = QuadratureSpec(tol=1e-8)
    checked = 0
    for ix in range(2, 4):
        for iy in range(2, 4):
            for it in range(2, 4):
                nodes = []
                wts = []
                for edges, idx in ((edges_xy, ix), (edges_xy, iy), (edges_t, it)):
                    mid = 0.5 * (edges[idx] + edges[idx + 1])
                    half = 0.5 * (edges[idx + 1] - edges[idx])
                    nodes.append(mid + half * gl_x)
                    wts.append(half * gl_w)
                mesh = np.meshgrid(*nodes, indexing="ij")
                pts = np.stack([m.ravel() for m in mesh], axis=-1)
                vals, _ = kernel_zsq(
                    h1, 1.0, block_norms_sq_flat(h1, pts), pts[:, -1], qspec
                )
                w = np.multiply.outer(np.multiply.outer(wts[0], wts[1]), wts[2]).ravel()
                expected = float(np.sum(vals * w))
                assert prob[ix, iy, it] == pytest.approx(expected, rel=0.10)
                checked += 1
    assert checked == 8


def test_markov_property(any_group):
    params = any_group
    one = indicator_like(params.dim, 80.0)
    val, se = semigroup_estimate(params, one, 1.0, np.zeros(params.dim), "mc", SPEC)
    assert abs(val - 1.0) <= 3.0 * max(se, 1e-12) + 1e-12


def test_semigroup_identity_at_zero_time(h1):
    # e^{h Delta} f -> f as h -> 0, first order in h (quadrature route)
    f = standard_family(h1, count=4, seed=2)[2]
    g = f.center + 0.1 * f.scale
    qs = QuadratureSpec(tol=1e-9)
    base = float(f.value(g))
    devs = []
    for h in (0.02, 0.01):
        v = semigroup_apply(h1, f, h, g, "quadrature", qspec=qs, grid_points=18)
        devs.append(abs(v - base))
    assert devs[1] <= 0.65 * devs[0]  # O(h) decay


def test_mc_quadrature_agreement(h1):
    fam = standard_family(h1, count=6, seed=3)
    rng = philox(55, 0)
    for f in fam[2:4]:
        g = rng.uniform(-0.5, 0.5, h1.dim)
        vq, _ = semigroup_estimate(h1, f, 0.8, g, "quadrature", qspec=QuadratureSpec(tol=1e-9))
        vm, se = semigroup_estimate(h1, f, 0.8, g, "mc", SPEC)
        assert abs(vm - vq) <= 3.0 * se + 1e-12


def test_semigroup_composition_mc(noniso):
    # sampling h1 then h2 composes to h1 + h2 through the group law
    f = standard_family(noniso, count=3, seed=4)[2]
    W1 = sample_heat_points(noniso, 0.4, SPEC.with_stream(1))
    W2 = sample_heat_points(noniso, 0.8, SPEC.with_stream(2))
    W12 = sample_heat_points(noniso, 1.2, SPEC.with_stream(3))
    two = f.value(multiply_flat(noniso, W1, W2))
    one = f.value(W12)
    se = math.sqrt(two.var() / two.size + one.var() / one.size)
    assert abs(float(two.mean()) - float(one.mean())) <= 3.0 * se + 1e-12


def test_grad_semigroup_routes(h1):
    f = standard_family(h1, count=5, seed=6)[4]
    g = np.array([0.3, -0.2, 0.15])
    cq, _ = grad_semigroup_components(h1, f, 0.9, g, "quadrature", qspec=QuadratureSpec(tol=1e-9))
    cm, se = grad_semigroup_components(h1, f, 0.9, g, "mc", SPEC)
    assert np.all(np.abs(cq - cm) <= 3.0 * se + 1e-10)
    # finite differences of the quadrature value along the frame flows
    eps = 1e-4
    for pair, kind in ((0, "x"), (0, "y")):
        step = np.zeros(3)
        step[2 * pair if kind == "x" else 2 * pair + 1] = eps
        vp = semigroup_apply(
            h1, f, 0.9, multiply_flat(h1, g, step), "quadrature", qspec=QuadratureSpec(tol=1e-9)
        )
        vm_ = semigroup_apply(
            h1, f, 0.9, multiply_flat(h1, g, -step), "quadrature", qspec=QuadratureSpec(tol=1e-9)
        )
        fd = (vp - vm_) / (2 * eps)
        col = 0 if kind == "x" else 1
        assert cq[col] == pytest.approx(fd, rel=1e-4, abs=1e-8)
    # norm wrapper
    assert grad_semigroup(h1, f, 0.9, g, "quadrature", qspec=QuadratureSpec(tol=1e-9)) == (
        pytest.approx(float(np.sqrt(np.sum(cq**2))), rel=1e-12)
    )


def test_gradient_at_origin_equals_right_frame_average(noniso):
    # at the origin the gradient components coincide with the semigroup of
    # the right-frame derivatives, sample by sample
    f = standard_family(noniso, count=4, seed=8)[1]
    g0 = np.zeros(noniso.dim)
    comps, _ = grad_semigroup_components(noniso, f, 0.6, g0, "mc", SPEC)
    idx = 0
    for i in range(noniso.l):
        for j in range(noniso.k[i]):
            for kind in ("x", "y"):
                rhs, _ = semigroup_estimate(
                    noniso, right_field_of(noniso, (i, j, kind), f), 0.6, g0, "mc", SPEC
                )
                assert comps[idx] == pytest.approx(rhs, rel=1e-10, abs=1e-12)
                idx += 1


def test_constant_gradient_zero(h1):
    # plateau wide enough that every sampled endpoint sees the flat region
    const = TestFunction(
        np.zeros(3), 60.0, np.zeros((1, 3), dtype=int), np.ones(1), bump="plateau"
    )
    comps, _ = grad_semigroup_components(h1, const, 0.5, np.zeros(3), "mc", SPEC)
    assert np.max(np.abs(comps)) <= 1e-12


def test_commutation_routes(h1):
    f = standard_family(h1, count=5, seed=10)[4]
    g = np.array([0.25, -0.4, 0.2])
    rep = check_commutation(h1, f, 1.0, g, SPEC, method="mc")
    assert rep.passed
    rep = check_commutation(h1, f, 1.0, g, None, qspec=QuadratureSpec(tol=1e-9), method="quadrature")
    assert rep.passed


def test_commutation_linear_t(noniso):
    # f linear in t on a wide plateau: e^{hD}(X-hat f)(g) equals the
    # closed-form coefficient -2 a_i y_{i,j}(g) up to Monte Carlo error
    # (the endpoint-averaged part -2 a_i E[Im w] vanishes in expectation)
    direction = np.zeros(noniso.dim)
    direction[-1] = 1.0
    f = linear_bump(np.zeros(noniso.dim), 60.0, direction, bump="plateau")
    g = np.array([0.3, -0.2, 0.4, 0.1, -0.25, 0.15, 0.2])
    h = 0.5
    rhs, _ = semigroup_estimate(noniso, right_field_of(noniso, (0, 0, "x"), f), h, g, "mc", SPEC)
    se = 2.0 * noniso.a[0] * math.sqrt(2.0 * h) / math.sqrt(SPEC.paths)
    assert rhs == pytest.approx(-2.0 * noniso.a[0] * g[1], abs=3.5 * se)


def test_ball_mean(any_group):
    params = any_group
    const = TestFunction(
        np.zeros(params.dim),
        6.0,
        np.zeros((1, params.dim), dtype=int),
        np.full(1, 2.5),
        bump="plateau",
    )
    val, _ = ball_mean(params, const, "mc", count=20000, seed=4)
    assert val == pytest.approx(2.5, abs=1e-12)
    # odd function integrates to zero over the symmetric ball
    direction = np.zeros(params.dim)
    direction[0] = 1.0
    odd = linear_bump(np.zeros(params.dim), 8.0, direction, bump="plateau")
    val, se = ball_mean(params, odd, "mc", count=100000, seed=5)
    assert abs(val) <= 3.5 * se
    f = standard_family(params, count=3, seed=12)[2]
    m1, se1 = ball_mean(params, f, "mc", count=150000, seed=6)
    if params.dim <= 3:
        m2, _ = ball_mean(params, f, "grid", grid_points=40)
        assert abs(m1 - m2) <= 3.0 * se1
    else:
        m2, se2 = ball_mean(params, f, "mc", count=150000, seed=60)
        assert abs(m1 - m2) <= 3.0 * math.hypot(se1, se2)


def test_li_inequality_report(h1):
    fam = standard_family(h1, count=10)
    pts = [np.zeros(3), np.array([0.4, -0.3, 0.2]), np.array([-0.8, 0.6, -0.4])]
    rep = check_li_inequality(h1, fam, pts, (0.25, 1.0), SPEC)
    assert rep.passed
    assert np.isfinite(rep.constant) and rep.constant > 0
    assert rep.stats["cases"] + rep.exclusions == len(fam) * len(pts) * 2


def test_li_constant_stable_under_refinement(h1):
    # doubling the path count moves the sup by at most its noise scale
    fam = standard_family(h1, count=6)
    pts = [np.zeros(3), np.array([0.4, -0.3, 0.2])]
    coarse = check_li_inequality(
        h1, fam, pts, (0.5, 1.0), DiffusionSpec(steps=150, paths=8000, seed=5)
    )
    fine = check_li_inequality(
        h1, fam, pts, (0.5, 1.0), DiffusionSpec(steps=150, paths=16000, seed=5)
    )
    assert abs(fine.constant - coarse.constant) <= 0.15 * coarse.constant + 0.02


def test_li_excludes_constants(h1):
    const = TestFunction(
        np.zeros(3), 60.0, np.zeros((1, 3), dtype=int), np.ones(1), bump="plateau"
    )
    with pytest.raises(RuntimeError):
        check_li_inequality(h1, [const], [np.zeros(3)], (0.5,), SPEC)


def test_li_euclidean_direction_sanity(h1):
    # f depending on one x coordinate only (flat plateau in the other
    # directions): the twist plays no role and the gradient ratio reduces
    # to the one-dimensional heat semigroup, which is a contraction;
    # Gauss-Hermite gives the independent one-dimensional value
    exps = np.array([[1, 0, 0], [3, 0, 0]])
    f = TestFunction(np.zeros(3), 40.0, exps, np.array([2.0, -30.0]), bump="plateau")
    g = np.array([0.5, 0.0, 0.0])
    h = 0.7
    W = sample_heat_points(h1, h, SPEC)
    pts = multiply_flat(h1, g, W)
    grad = f.gradient(pts)
    assert np.max(np.abs(grad[:, 1:])) == 0.0  # depends on x only
    num = abs(float(np.mean(grad[:, 0])))
    den = float(np.mean(np.abs(grad[:, 0])))
    assert num <= den * (1.0 + 1e-12)
    # independent one-dimensional evaluation of the numerator
    nodes, wts = np.polynomial.hermite_e.hermegauss(48)
    x1 = g[0] + nodes * math.sqrt(2.0 * h)

    def dphi(x):
        e = np.zeros((x.size, 3))
        e[:, 0] = x
        return f.gradient(e)[:, 0]

    oracle = float(np.sum(dphi(x1) * wts) / np.sum(wts))
    se = float(np.std(grad[:, 0]) / math.sqrt(grad.shape[0]))
    assert abs(float(np.mean(grad[:, 0])) - oracle) <= 3.0 * se


def test_cheeger_report(h1):
    fam = standard_family(h1, count=10)
    rep = check_cheeger(h1, fam, SPEC, ball_count=80000)
    assert rep.passed
    assert rep.stats["ball"] > 0 and rep.stats["global"] > 0
    assert rep.stats["complement"] <= rep.stats["global"] + 1e-12


def test_cheeger_support_outside_ball(h1):
    # support disjoint from the unit ball forces a zero ball average
    center = np.array([3.0, 0.0, 0.0])
    f = standard_family(h1, count=1, seed=44)[0]
    far = TestFunction(center, 0.5, f.exps, f.coeffs)
    m, _ = ball_mean(h1, far, "mc", count=40000, seed=9)
    assert m == 0.0


def test_lse_poe_report(h1):
    fam = standard_family(h1, count=8)
    pts = [np.zeros(3), np.array([0.3, 0.2, -0.1])]
    rep = check_log_sobolev_poincare(h1, fam, pts, (0.5, 1.0), SPEC)
    assert rep.passed
    assert rep.stats["entropy_constant"] >= 0
    assert rep.stats["variance_constant"] >= 0
    # entropy dominates variance for the same data (log-Sobolev implies
    # Poincare with the same constant up to the factor from the expansion)
    assert rep.stats["entropy_constant"] >= rep.stats["variance_constant"] * 0.5


def test_holder_corollary(h1):
    fam = standard_family(h1, count=6)
    pts = [np.zeros(3), np.array([0.4, -0.1, 0.3])]
    rep = check_holder_corollary(h1, fam, pts, (0.5, 1.0), SPEC, constant=1.5)
    assert rep.passed
    assert rep.stats["worst_jensen_violation"] <= 1.0


def test_integration_by_parts(h1):
    f = standard_family(h1, count=5, seed=14)[2]
    rep = check_integration_by_parts(h1, f, QuadratureSpec(tol=1e-9))
    assert rep.passed
    assert rep.stats["worst_rel_error"] <= 1e-3


def test_translation_dilation_reduction(h1):
    f = standard_family(h1, count=5, seed=16)[2]
    # identity case
    rep = check_translation_dilation_reduction(h1, f, 1.0, np.zeros(3))
    assert rep.passed
    # pure translation and a dilation case
    rep = check_translation_dilation_reduction(h1, f, 1.0, np.array([0.5, -0.3, 0.2]))
    assert rep.passed
    rep = check_translation_dilation_reduction(h1, f, 4.0, np.zeros(3))
    assert rep.passed


def test_transformed_field_consistency(h1):
    f = standard_family(h1, count=3, seed=18)[1]
    g = np.array([0.4, 0.1, -0.3])
    moved = TransformedField(h1, f, g, math.sqrt(2.0))
    rng = philox(64, 2)
    pts = rng.uniform(-0.6, 0.6, size=(40, 3))
    scaled = pts * math.sqrt(2.0)
    scaled[:, -1] = pts[:, -1] * 2.0
    direct = f.value(multiply_flat(h1, g, scaled))
    assert_allclose(moved.value(pts), direct, atol=0)
    # gradient by finite differences
    grad = moved.gradient(pts[:5])
    eps = 1e-6
    for d in range(3):
        e = np.zeros(3)
        e[d] = eps
        fd = (moved.value(pts[:5] + e) - moved.value(pts[:5] - e)) / (2 * eps)
        assert np.max(np.abs(grad[:, d] - fd)) <= 1e-6 * (1 + np.max(np.abs(fd)))


def test_hgrad_field_matches_norm(h1):
    from nilheat.groups import horizontal_gradient_norm

    f = standard_family(h1, count=3, seed=20)[1]
    g_flat = f.center + 0.2 * f.scale
    val = hgrad_norm_of(h1, f).value(g_flat)
    want = horizontal_gradient_norm(h1, f, GroupPoint.from_flat(h1, g_flat))
    assert float(val) == pytest.approx(want, rel=1e-12)
