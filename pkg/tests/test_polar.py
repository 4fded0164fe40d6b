"""Chart coordinates: map, inverse, Jacobian, regions, ray integrals."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nilheat.distance import distance_squared, solve_theta
from nilheat.groups import GroupPoint, block_norms_sq
from nilheat.polar import (
    ANGLE_MARGIN,
    ANGLE_SPLIT,
    SIZE_SPLIT,
    PolarDomainError,
    PolarPoint,
    check_change_of_variables,
    classify_region,
    classify_region_arrays,
    det_bordered,
    horizontal_path_check,
    jacobian_closed_form,
    jacobian_closed_form_arrays,
    jacobian_comparison_arrays,
    jacobian_matrix,
    kernel_estimate_polar,
    path_velocity,
    pj_estimate,
    pj_estimate_arrays,
    polar_point_from_flat,
    psi,
    psi_flat,
    psi_inverse,
    ray_integral_check,
    sample_exterior_cloud,
    speed,
)
from nilheat.sampling import philox
from nilheat.testfuncs import linear_bump, standard_family


def _random_polar(params, rng, eta=None):
    u = tuple(rng.standard_normal(k) + 1j * rng.standard_normal(k) for k in params.k)
    if abs(u[-1][0]) < 0.1:
        u = u[:-1] + (u[-1] + 0.5,)
    eta = float(rng.uniform(0.1, 2.9)) * rng.choice([-1.0, 1.0]) if eta is None else eta
    return PolarPoint(u, eta)


def test_domain_validation():
    with pytest.raises(PolarDomainError):
        PolarPoint((np.array([0j]),), 1.0)  # top block zero
    with pytest.raises(PolarDomainError):
        PolarPoint((np.array([1 + 0j]),), 0.0)
    with pytest.raises(PolarDomainError):
        PolarPoint((np.array([1 + 0j]),), 3.5)


def test_block_norm_identity(any_group, rng):
    # |z_j|^2 = |u_j|^2 (2 - 2 cos(2 a_j eta))
    params = any_group
    p = _random_polar(params, rng)
    g = psi(params, p)
    for j in range(params.l):
        want = float(np.sum(np.abs(p.u[j]) ** 2)) * (
            2.0 - 2.0 * math.cos(2.0 * params.a[j] * p.eta)
        )
        got = float(np.sum(np.abs(g.z[j]) ** 2))
        assert got == pytest.approx(want, rel=1e-12)


def test_small_eta_limit(any_group, rng):
    params = any_group
    p = _random_polar(params, rng, eta=1e-8)
    g = psi(params, p)
    assert np.max(np.abs(g.flat())) <= 1e-6


def test_angle_and_distance_on_chart(any_group, rng):
    params = any_group
    for _ in range(15):
        p = _random_polar(params, rng)
        g = psi(params, p)
        sol = solve_theta(params, g)
        assert sol.theta == pytest.approx(p.eta, abs=1e-10)
        d = math.sqrt(distance_squared(params, g))
        assert d == pytest.approx(speed(params, p) * abs(p.eta), rel=1e-8)
        assert math.copysign(1.0, p.eta) == math.copysign(1.0, g.t)


def test_roundtrips(any_group, rng):
    params = any_group
    for _ in range(15):
        p = _random_polar(params, rng)
        g = psi(params, p)
        back = psi_inverse(params, g)
        assert back.eta == pytest.approx(p.eta, abs=1e-10)
        for b1, b2 in zip(back.u, p.u):
            assert_allclose(b1, b2, rtol=0, atol=1e-10)
        # the other direction, starting from an admissible group point
        g2 = psi(params, back)
        assert_allclose(g2.flat(), g.flat(), rtol=0, atol=1e-10)


def test_psi_inverse_domain(noniso):
    with pytest.raises(PolarDomainError):
        psi_inverse(noniso, GroupPoint((np.array([1 + 0j]), np.zeros(2, dtype=complex)), 0.2))
    with pytest.raises(PolarDomainError):
        psi_inverse(noniso, GroupPoint((np.array([1 + 0j]), np.array([1j, 0j])), 0.0))


def test_jacobian_matrix_structure_and_fd(noniso):
    rng = philox(31, 0)
    p = _random_polar(noniso, rng)
    M = jacobian_matrix(noniso, p)
    # diagonal blocks are exactly the rotation-like matrices
    pair = 0
    for i in range(noniso.l):
        C = 1.0 - math.cos(2 * noniso.a[i] * p.eta)
        S = math.sin(2 * noniso.a[i] * p.eta)
        for j in range(noniso.k[i]):
            r0 = 2 * pair
            assert M[r0, r0] == pytest.approx(C, abs=0)
            assert M[r0, r0 + 1] == pytest.approx(-S, abs=0)
            assert M[r0 + 1, r0] == pytest.approx(S, abs=0)
            pair += 1
    # finite-difference Jacobian of the chart map
    u_flat = np.concatenate(
        [np.stack([b.real, b.imag], axis=-1).reshape(-1) for b in p.u]
    )
    base = np.concatenate([u_flat, [p.eta]])
    eps = 1e-6
    for d in range(noniso.dim):
        e = np.zeros(noniso.dim)
        e[d] = eps
        up = psi_flat(noniso, (base + e)[:-1], (base + e)[-1])
        dn = psi_flat(noniso, (base - e)[:-1], (base - e)[-1])
        fd = (up - dn) / (2 * eps)
        assert np.max(np.abs(fd - M[:, d])) <= 1e-6 * (1 + np.max(np.abs(fd)))


def test_jacobian_homogeneity_in_u(noniso, rng):
    # border column and row scale linearly with u, the corner quadratically
    p = _random_polar(noniso, rng)
    M1 = jacobian_matrix(noniso, p)
    c = 2.5
    p2 = PolarPoint(tuple(c * b for b in p.u), p.eta)
    M2 = jacobian_matrix(noniso, p2)
    dim = noniso.dim
    assert_allclose(M2[: dim - 1, dim - 1], c * M1[: dim - 1, dim - 1], rtol=1e-13)
    assert_allclose(M2[dim - 1, : dim - 1], c * M1[dim - 1, : dim - 1], rtol=1e-13)
    assert M2[dim - 1, dim - 1] == pytest.approx(c * c * M1[dim - 1, dim - 1], rel=1e-13)


def test_det_bordered_against_lu():
    rng = philox(32, 1)
    # identity with the required sparsity
    assert det_bordered(np.eye(5)) == 1.0
    for _ in range(300):
        m = int(rng.integers(4, 9))
        M = rng.standard_normal((m, m))
        M[0, 2 : m - 1] = 0.0
        M[1, 2 : m - 1] = 0.0
        M[2 : m - 1, 0] = 0.0
        M[2 : m - 1, 1] = 0.0
        lu = float(np.linalg.det(M))
        assert det_bordered(M) == pytest.approx(lu, rel=1e-9, abs=1e-12)
    bad = rng.standard_normal((5, 5))
    with pytest.raises(ValueError):
        det_bordered(bad)


def test_closed_form_jacobian(any_group, rng):
    params = any_group
    for _ in range(40):
        p = _random_polar(params, rng)
        M = jacobian_matrix(params, p)
        lu = float(np.linalg.det(M))
        cf = jacobian_closed_form(params, p)
        rec = det_bordered(M)
        assert cf == pytest.approx(lu, rel=1e-9)
        assert rec == pytest.approx(lu, rel=1e-9)
        assert cf > 0.0


def test_closed_form_single_block_value():
    # l = k = a = 1 at eta = pi/2: independent evaluation of the formula
    params_u = 0.7 + 0.4j
    usq = abs(params_u) ** 2
    want = 8.0 * usq * (2.0 - 2.0 * math.cos(math.pi) - math.pi * math.sin(math.pi))
    assert want == pytest.approx(32.0 * usq, rel=1e-12)
    from nilheat.groups import GroupParams

    h1 = GroupParams(1, (1,), (1.0,))
    p = PolarPoint((np.array([params_u]),), math.pi / 2)
    assert jacobian_closed_form(h1, p) == pytest.approx(want, rel=1e-13)


def test_jacobian_power_law_comparison(any_group, rng):
    params = any_group
    us = rng.standard_normal((300, 2 * params.n))
    etas = rng.uniform(0.05, 3.1, 300) * rng.choice([-1.0, 1.0], 300)
    usq = np.stack(
        [np.sum(us[:, 2 * s.start : 2 * s.stop] ** 2, axis=-1) for s in params.block_slices()],
        axis=-1,
    )
    J = jacobian_closed_form_arrays(params, usq, etas)
    comp = jacobian_comparison_arrays(params, usq, etas)
    ratio = J / comp
    assert np.all(np.isfinite(ratio)) and ratio.min() > 0
    # evenness in eta
    J2 = jacobian_closed_form_arrays(params, usq, -etas)
    assert_allclose(J2, J, rtol=1e-13)


def test_region_examples(h1, noniso):
    # |eta| = pi/8 with U|eta| >= 1 is region 1
    p = PolarPoint((np.array([4.0 + 0j]),), math.pi / 8)
    assert classify_region(h1, p) == "R1"
    # |eta| = 3, huge top block: crowding exceeds the split
    big = PolarPoint((np.array([0j]), np.array([0j, 30.0 + 0j])), 3.0)
    crowd = 900.0 * (math.pi - 3.0)
    assert crowd > SIZE_SPLIT
    assert classify_region(noniso, big) == "R2"
    # |eta| = 3 with a moderate top block stays under the split
    small = PolarPoint((np.array([0j]), np.array([0j, 3.0 + 0j])), 3.0)
    assert 9.0 * (math.pi - 3.0) <= SIZE_SPLIT
    assert classify_region(noniso, small) == "R3"
    # inside the unit ball the label is undefined
    inside = PolarPoint((np.array([0.2 + 0j]),), 0.5)
    with pytest.raises(PolarDomainError):
        classify_region(h1, inside)


def test_region_partition(noniso):
    u, eta, labels, diag = sample_exterior_cloud(noniso, 200, seed=3)
    assert set(np.unique(labels)) <= {1, 2, 3}
    assert all(v > 0 for v in diag["per_region"].values())
    usq = np.stack(
        [np.sum(u[:, 2 * s.start : 2 * s.stop] ** 2, axis=-1) for s in noniso.block_slices()],
        axis=-1,
    )
    relabeled = classify_region_arrays(noniso, usq, eta)
    assert np.array_equal(relabeled, labels)


def test_kernel_estimate_inside_ball(h1):
    # U|eta| <= 1: the comparison quantity is the constant 1
    val = kernel_estimate_polar(h1, np.array([0.01]), np.asarray(0.5))
    assert float(val) == 1.0


def test_pj_estimate_wide_case(noniso):
    # in the wide-angle case the display is |u| |eta|^{2n+1} e^{-U^2 eta^2/4}
    p = PolarPoint((np.array([1.0 + 0j]), np.array([2.0 + 0j, 0j])), 1.0)
    usq = p.block_norms_sq()
    U2 = 4.0 * (0.25 * 1.0 + 1.0 * 4.0)
    want = math.sqrt(5.0) * 1.0 ** (2 * noniso.n + 1) * math.exp(-U2 / 4.0)
    assert pj_estimate(noniso, p) == pytest.approx(want, rel=1e-12)
    assert math.pi - 1.0 >= ANGLE_MARGIN


def test_pj_ratio_bounded(h1):
    u, eta, labels, _ = sample_exterior_cloud(h1, 120, seed=9)
    usq = np.sum(u**2, axis=-1)[:, None]
    from nilheat.kernel import kernel_points

    coords = psi_flat(h1, u, eta)
    p, _ = kernel_points(h1, 1.0, coords)
    J = jacobian_closed_form_arrays(h1, usq, eta)
    est = pj_estimate_arrays(h1, usq, eta)
    ratio = p * J / est
    assert np.all(np.isfinite(ratio)) and ratio.min() > 0


def test_ray_integral_regions(noniso):
    u, eta, labels, _ = sample_exterior_cloud(noniso, 24, seed=5)
    for r in (1, 2, 3):
        idx = np.where(labels == r)[0][:2]
        for i in idx:
            out = ray_integral_check(noniso, polar_point_from_flat(noniso, u[i], float(eta[i])))
            assert np.isfinite(out["ratio"]) and out["ratio"] > 0
            assert out["integral_error"] <= 1e-3 * abs(out["integral"])


def test_ray_integral_even_in_eta(h1):
    p_pos = PolarPoint((np.array([2.0 + 1.0j]),), 0.9)
    p_neg = PolarPoint((np.array([2.0 + 1.0j]),), -0.9)
    r1 = ray_integral_check(h1, p_pos)
    r2 = ray_integral_check(h1, p_neg)
    assert r1["ratio"] == pytest.approx(r2["ratio"], rel=1e-9)


def test_path_velocity_speed(any_group, rng):
    params = any_group
    p = _random_polar(params, rng)
    s = np.linspace(0.05, 1.0, 7)
    vel = path_velocity(params, p, s)
    sp = np.sqrt(np.sum(vel**2, axis=-1))
    want = speed(params, p) * abs(p.eta)
    assert np.max(np.abs(sp - want)) <= 1e-8 * want


def test_horizontal_path_report(any_group, rng):
    params = any_group
    p = _random_polar(params, rng)
    f = standard_family(params, count=3, seed=5)[1]
    rep = horizontal_path_check(params, p, f)
    assert rep.passed, rep.notes


def test_cauchy_schwarz_tightness(noniso, rng):
    # align the gradient with the velocity at one parameter value: the
    # bound |d/ds f| <= U|eta| |grad f| becomes an equality
    p = _random_polar(noniso, rng)
    s0 = 0.6
    vel = path_velocity(noniso, p, np.asarray(s0))
    u_flat = np.concatenate(
        [np.stack([b.real, b.imag], axis=-1).reshape(-1) for b in p.u]
    )
    at = psi_flat(noniso, u_flat, np.asarray(s0 * p.eta))
    direction = np.zeros(noniso.dim)
    direction[: 2 * noniso.n] = vel  # t-component zero: X/Y pick it up exactly
    f = linear_bump(at, 5.0, direction, bump="plateau")
    from nilheat.groups import horizontal_components

    hg = horizontal_components(noniso, f.gradient(at), at, "left")
    dds = float(np.sum(vel * hg))
    bound = speed(noniso, p) * abs(p.eta) * float(np.sqrt(np.sum(hg**2)))
    assert dds == pytest.approx(bound, rel=1e-8)


def test_change_of_variables(any_group):
    rep = check_change_of_variables(any_group)
    assert rep.passed
    assert rep.stats["rel_difference"] <= 1e-4
