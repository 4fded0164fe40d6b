"""Verification suites: orchestration of the library checks into reports.

Each suite function takes a RunConfig and returns one VerificationReport
whose stats collect the sub-check results; the verdict is the conjunction
of the sub-verdicts.  Frozen regression values (recorded on the first
verified run, shipped as package data) gate the empirical constants with
a +-20 percent band; finiteness bands like ratio extremes use the frozen
interval directly.  When a group has no frozen entry the suite still runs
and the verdict covers only the analytic checks, with a note.

No numeric logic lives in the CLI; everything observable is produced
here or deeper in the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import distance as dist
from . import kernel as ker
from . import polar
from . import semigroup as sg
from .groups import GroupParams, GroupPoint, block_norms_sq_flat, inverse_flat
from .reports import VerificationReport, load_frozen_bounds, within_band
from .sampling import CloudSpec, kernel_feasible_mask, philox, uniform_box
from .testfuncs import indicator_like, standard_family

__all__ = ["SUITE_NAMES", "RunConfig", "config_from_dict", "run_suite", "run_all", "SUITE_RUNNERS"]

SUITE_NAMES = ("distance", "kernel", "polar", "lemma6", "cheeger", "li", "lse-poe")

_DEFAULT_SIZES = {
    "distance_points": 10000,
    "scaling_points": 1000,
    "kernel_cloud": 10000,
    "symmetry_points": 200,
    "polar_points": 1000,
    "sparse_matrices": 1000,
    "lemma6_points": 1000,
    "family": 32,
    "li_points": 16,
    "ball_count": 200000,
}


@dataclass
class RunConfig:
    group: GroupParams
    seed: int
    output_dir: str = "reports"
    suites: tuple = SUITE_NAMES
    quadrature: ker.QuadratureSpec = field(default_factory=ker.QuadratureSpec)
    diffusion_steps: int = 200
    diffusion_paths: int = 10000
    workers: int = 1
    h_values: tuple = (0.25, 0.5, 1.0, 2.0)
    sizes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("a seed is mandatory")
        bad = [s for s in self.suites if s not in SUITE_NAMES]
        if bad:
            raise ValueError(f"unknown suites: {bad}")
        merged = dict(_DEFAULT_SIZES)
        merged.update(self.sizes)
        self.sizes = merged

    def diffusion(self, stream=0) -> sg.DiffusionSpec:
        return sg.DiffusionSpec(
            steps=self.diffusion_steps,
            paths=self.diffusion_paths,
            seed=self.seed,
            stream=stream,
            workers=self.workers,
        )

    def frozen_for(self, suite: str):
        try:
            table = load_frozen_bounds()
        except FileNotFoundError:
            return None
        return table.get(self.group.label(), {}).get(suite)


def config_from_dict(d: dict) -> RunConfig:
    """Build a RunConfig from a parsed config file plus CLI overrides."""
    if "seed" not in d:
        raise ValueError("config must set a seed")
    g = d.get("group", {})
    try:
        group = GroupParams(int(g["l"]), tuple(g["k"]), tuple(g["a"]))
    except KeyError as exc:
        raise ValueError(f"config group is missing {exc}") from exc
    quad = ker.QuadratureSpec(**d.get("quadrature", {}))
    diff = d.get("diffusion", {})
    return RunConfig(
        group=group,
        seed=int(d["seed"]),
        output_dir=d.get("output_dir", "reports"),
        suites=tuple(d.get("suites", SUITE_NAMES)),
        quadrature=quad,
        diffusion_steps=int(diff.get("steps", 200)),
        diffusion_paths=int(diff.get("paths", 10000)),
        workers=int(d.get("workers", 1)),
        h_values=tuple(d.get("h_values", (0.25, 0.5, 1.0, 2.0))),
        sizes=dict(d.get("sizes", {})),
    )


def _is_h1(group: GroupParams) -> bool:
    return group.l == 1 and group.k == (1,) and group.a == (1.0,)


def _block_sq(params, coords):
    return block_norms_sq_flat(params, coords)


# ---------------------------------------------------------------------------
# distance suite
# ---------------------------------------------------------------------------

def suite_distance(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    count = cfg.sizes["distance_points"]
    cloud = CloudSpec(count, 2.0, 3.0, cfg.seed)
    coords = uniform_box(params, cloud, stream=1)
    zsq = _block_sq(params, coords)
    t = coords[:, -1]
    rep = VerificationReport(
        identifier="distance",
        config={"group": params.label(), "count": count},
        seed=cfg.seed,
    )

    theta, branch, residual = dist.solve_theta_arrays(params, zsq, t)
    interior = branch != 2
    scaled_res = np.abs(residual[interior]) / (1.0 + np.abs(t[interior]))
    # interior solves degenerating toward the chart edge (theta within
    # 1e-8 of +-pi) are accepted at a widened tolerance and flagged
    near_edge = np.abs(theta[interior]) >= math.pi - 1e-8
    strict_ok = scaled_res <= 1e-12
    flagged = int(np.sum(near_edge & ~strict_ok & (scaled_res <= 1e-6)))
    if flagged:
        rep.notes.append(f"{flagged} near-edge solves accepted at widened tolerance")
    rep.stats["residual_max_scaled"] = float(np.max(scaled_res[~near_edge]))
    rep.require(
        bool(np.all(strict_ok | (near_edge & (scaled_res <= 1e-6)))),
        "angle-equation residual above 1e-12 (1 + |t|)",
    )

    d2, th, br, form2 = dist.distance_squared_arrays(params, zsq, t, return_parts=True)
    mask = br != 2
    rel = np.abs(d2[mask] - form2[mask]) / np.maximum(d2[mask], 1e-300)
    rep.stats["form_agreement_max"] = float(rel.max())
    rep.require(float(rel.max()) <= 1e-10, "closed-form variants disagree beyond 1e-10")

    # t = 0 slice: d = |z|
    z_only = coords.copy()
    z_only[:, -1] = 0.0
    d2z = dist.distance_squared_arrays(params, zsq, np.zeros(count))
    relz = np.abs(d2z - zsq.sum(axis=-1)) / np.maximum(zsq.sum(axis=-1), 1e-300)
    rep.stats["z_slice_max"] = float(relz.max())
    rep.require(float(relz.max()) <= 1e-10, "d(z, 0) must equal |z|")

    # z = 0 axis: d^2 = pi |t|
    taxis = np.linspace(-3.0, 3.0, 101)
    taxis = taxis[taxis != 0.0]
    d2t = dist.distance_squared_arrays(params, np.zeros((taxis.size, params.l)), taxis)
    relt = np.abs(d2t - math.pi * np.abs(taxis)) / (math.pi * np.abs(taxis))
    rep.stats["t_axis_max"] = float(relt.max())
    rep.require(float(relt.max()) <= 1e-10, "d(0, t)^2 must equal pi |t|")

    # homogeneity under dilation
    rng = philox(cfg.seed, 2)
    r = rng.uniform(0.3, 3.0, size=count)
    d2r = dist.distance_squared_arrays(params, zsq * r[:, None] ** 2, t * r**2)
    relh = np.abs(d2r - r**2 * d2) / np.maximum(r**2 * d2, 1e-300)
    rep.stats["homogeneity_max"] = float(relh.max())
    rep.require(float(relh.max()) <= 1e-10, "dilation homogeneity broken")

    # symmetries under t -> -t and z -> -z
    d2m = dist.distance_squared_arrays(params, zsq, -t)
    rep.stats["t_mirror_max"] = float(
        np.max(np.abs(d2m - d2) / np.maximum(d2, 1e-300))
    )
    rep.require(rep.stats["t_mirror_max"] <= 1e-12, "t-mirror symmetry broken")

    # boundary-branch continuity: interior distance approaches the boundary
    # formula as |t| climbs to the threshold with z_l -> 0
    base = np.abs(coords[0, : 2 * params.n]) + 0.5
    zsq_head = _block_sq(params, np.concatenate([base, [0.0]]))
    zsq_head[-1] = 0.0
    thr = dist.boundary_threshold(params, zsq_head)
    cont_err = 0.0
    if thr > 0:
        eps_zl = 1e-7
        zsq_near = zsq_head.copy()
        zsq_near[-1] = eps_zl**2
        d2_int = dist.distance_squared_arrays(params, zsq_near, np.asarray(thr))
        d2_bdy = dist.distance_squared_arrays(params, zsq_head, np.asarray(thr))
        cont_err = abs(float(d2_int) - float(d2_bdy)) / float(d2_bdy)
    else:
        # single-block groups: approach the t-axis along shrinking z
        tref = 1.7
        for eps_zl in (1e-3, 1e-5):
            zz = np.zeros(params.l)
            zz[-1] = eps_zl**2
            d2_int = dist.distance_squared_arrays(params, zz, np.asarray(tref))
            cont_err = abs(float(d2_int) - math.pi * tref) / (math.pi * tref)
    rep.stats["boundary_continuity"] = cont_err
    rep.require(cont_err <= 1e-3, "interior/boundary branch mismatch along z_l -> 0")

    # monotone map roundtrip
    ws = np.linspace(-3.1, 3.1, 63)
    back = np.array([dist.mu_inverse(dist.mu(dist.mu_inverse(float(v)))) for v in ws])
    rt = np.abs(back - np.array([dist.mu_inverse(float(v)) for v in ws]))
    rep.stats["mu_roundtrip_max"] = float(rt.max())
    rep.require(float(rt.max()) <= 1e-12, "mu inverse roundtrip above 1e-12")

    eq = dist.check_distance_equivalence(
        params, CloudSpec(count, 2.0, 3.0, cfg.seed), frozen=cfg.frozen_for("distance")
    )
    rep.stats["equivalence"] = dict(eq.stats)
    rep.frozen = dict(eq.frozen)
    if not cfg.frozen_for("distance"):
        rep.notes.append("no frozen bounds for this group; band check skipped")
    rep.require(bool(eq.passed), "distance equivalence report failed")
    return rep


# ---------------------------------------------------------------------------
# kernel suite
# ---------------------------------------------------------------------------

def suite_kernel(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    spec = cfg.quadrature
    rep = VerificationReport(
        identifier="kernel",
        config={"group": params.label()},
        seed=cfg.seed,
    )

    if _is_h1(params):
        anchor = ker.kernel(params, 1.0, GroupPoint((np.zeros(1, dtype=complex),), 0.0), spec)
        rep.stats["origin_value"] = anchor.value
        rep.stats["origin_abs_error"] = abs(anchor.value - 1.0 / 64.0)
        rep.require(
            rep.stats["origin_abs_error"] <= 1e-6,
            "unit-time origin value off the 1/64 anchor",
        )
        # a looser oscillation factor is plenty here: GL15 resolves a full
        # cosine period per panel far below the 1e-6 target
        mass_spec = ker.QuadratureSpec(tol=1e-9, osc_factor=2.0)
        norm = ker.integrate_radial(
            params,
            lambda zs, tt: ker.kernel_zsq(params, 1.0, zs, tt, mass_spec)[0],
            rho_max=11.0,
            t_max=55.0,
        )
        rep.stats["mass_deviation"] = abs(norm - 1.0)
        rep.require(rep.stats["mass_deviation"] <= 1e-6, "kernel mass must be 1")

    # scaling law over random (h, g)
    rng = philox(cfg.seed, 3)
    nsc = cfg.sizes["scaling_points"]
    cloud = uniform_box(params, CloudSpec(nsc, 2.0, 2.0, cfg.seed), stream=4)
    keep = kernel_feasible_mask(params, cloud, h=0.25)
    cloud = cloud[keep]
    hs = rng.uniform(0.25, 4.0, size=cloud.shape[0])
    worst = 0.0
    for i in range(cloud.shape[0]):
        g = GroupPoint.from_flat(params, cloud[i])
        r = ker.check_scaling(params, float(hs[i]), g, spec)
        worst = max(worst, r.stats["deviation"])
    rep.stats["scaling_max_deviation"] = worst
    rep.stats["scaling_cases"] = int(cloud.shape[0])
    rep.require(worst <= 1e-8, "scaling law deviation above 1e-8")

    # symmetry identities
    nsym = cfg.sizes["symmetry_points"]
    pts = uniform_box(params, CloudSpec(nsym, 1.5, 1.5, cfg.seed), stream=5)
    pts = pts[kernel_feasible_mask(params, pts)]
    vals, _ = ker.kernel_points(params, 1.0, pts, spec)
    vals_inv, _ = ker.kernel_points(params, 1.0, inverse_flat(pts), spec)
    inv_err = float(np.max(np.abs(vals - vals_inv) / vals))
    rep.stats["inversion_symmetry_max"] = inv_err
    rep.require(inv_err <= 1e-8, "inversion symmetry broken")

    out = ker.kernel_derivatives(params, 1.0, pts, spec)
    dp = out["dp"]
    n = params.n
    x, y = pts[:, 0 : 2 * n : 2], pts[:, 1 : 2 * n : 2]
    lhs = x * dp[:, 1 : 2 * n : 2]
    rhs = y * dp[:, 0 : 2 * n : 2]
    scale = np.maximum(np.abs(lhs), np.abs(rhs)).max()
    rot_err = float(np.max(np.abs(lhs - rhs)) / max(scale, 1e-300))
    rep.stats["rotation_identity_max"] = rot_err
    rep.require(rot_err <= 1e-8, "x d_y p = y d_x p identity broken")

    # equivalent complex-frame identity
    a = params.pair_a
    gt = dp[:, 2 * n]
    zc = x + 1j * y
    left = np.conj(zc) * (
        (dp[:, 0 : 2 * n : 2] - 2.0 * a * y * gt[:, None])
        + 1j * (dp[:, 1 : 2 * n : 2] + 2.0 * a * x * gt[:, None])
    )
    right = zc * (
        (dp[:, 0 : 2 * n : 2] + 2.0 * a * y * gt[:, None])
        - 1j * (dp[:, 1 : 2 * n : 2] - 2.0 * a * x * gt[:, None])
    )
    cscale = max(float(np.max(np.abs(left))), 1e-300)
    frame_err = float(np.max(np.abs(left - right)) / cscale)
    rep.stats["complex_frame_identity_max"] = frame_err
    rep.require(frame_err <= 1e-8, "complex frame identity broken")

    # log-derivative bounds: empirical constants over the cloud and h set
    ncl = cfg.sizes["kernel_cloud"]
    cl = uniform_box(params, CloudSpec(ncl, 2.0, 2.0, cfg.seed), stream=6)
    cl = cl[kernel_feasible_mask(params, cl, h=min(cfg.h_values))]
    c3 = 0.0
    c4 = 0.0
    for h in cfg.h_values:
        der = ker.kernel_derivatives(params, h, cl, spec)
        egrad = der["dp"] / der["p"][:, None]
        from .groups import horizontal_components

        comps = horizontal_components(params, egrad, cl, "left")
        gnorm = np.sqrt(np.sum(comps**2, axis=-1))
        d = np.sqrt(dist.distance_squared_arrays(params, _block_sq(params, cl), cl[:, -1]))
        sel = d > 0.1
        c3 = max(c3, float(np.max(h * gnorm[sel] / d[sel])))
        c4 = max(c4, float(np.max(h * np.abs(egrad[:, -1]))))
    rep.stats["log_gradient_constant"] = c3
    rep.stats["t_log_derivative_constant"] = c4
    rep.require(np.isfinite(c3) and np.isfinite(c4), "log-derivative sups must be finite")

    frozen = cfg.frozen_for("kernel")
    if frozen:
        rep.frozen = dict(frozen)
        rep.require(within_band(c3, frozen["log_gradient_constant"]), "c3 left the frozen band")
        rep.require(within_band(c4, frozen["t_log_derivative_constant"]), "c4 left the frozen band")
        comparison = ker.check_kernel_comparison(
            params,
            cl,
            spec,
            frozen={
                "ratio_min": frozen["comparison_ratio_min"],
                "ratio_max": frozen["comparison_ratio_max"],
            },
        )
    else:
        rep.notes.append("no frozen bounds for this group; band checks skipped")
        comparison = ker.check_kernel_comparison(params, cl, spec)
    rep.stats["comparison"] = dict(comparison.stats)
    rep.require(bool(comparison.passed), "two-sided comparison report failed")

    # halving the tolerance must stay inside the coarser error estimate
    probe_pts = cl[:8]
    coarse_v, coarse_e = ker.kernel_points(params, 1.0, probe_pts, spec)
    fine_spec = ker.QuadratureSpec(
        tol=spec.tol / 2.0,
        lambda_max=spec.lambda_max,
        panel_budget=spec.panel_budget,
        osc_factor=spec.osc_factor,
    )
    fine_v, _ = ker.kernel_points(params, 1.0, probe_pts, fine_spec)
    conv_ok = bool(np.all(np.abs(fine_v - coarse_v) <= np.maximum(coarse_e, 1e-16)))
    rep.stats["refinement_consistent"] = conv_ok
    rep.require(conv_ok, "tolerance halving moved values beyond the error estimate")
    return rep


# ---------------------------------------------------------------------------
# polar suite
# ---------------------------------------------------------------------------

def _random_polar_cloud(params, count, seed):
    rng = philox(seed, 7)
    u = rng.uniform(-2.0, 2.0, size=(count, 2 * params.n))
    # keep the top block away from zero
    top = u[:, -2 * params.k[-1] :]
    small = np.sqrt(np.sum(top**2, axis=-1)) < 0.05
    top[small, 0] += 0.5
    eta = rng.uniform(0.05, 3.0, size=count) * rng.choice([-1.0, 1.0], size=count)
    return u, eta


def suite_polar(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    count = cfg.sizes["polar_points"]
    rep = VerificationReport(
        identifier="polar", config={"group": params.label(), "count": count}, seed=cfg.seed
    )
    u, eta = _random_polar_cloud(params, count, cfg.seed)
    coords = polar.psi_flat(params, u, eta)
    zsq = _block_sq(params, coords)

    # angle coordinate and distance along the chart
    theta, branch, _ = dist.solve_theta_arrays(params, zsq, coords[:, -1])
    ang_err = float(np.max(np.abs(theta - eta)))
    rep.stats["angle_roundtrip_max"] = ang_err
    rep.require(ang_err <= 1e-10, "angle coordinate of the chart is off")

    a = np.asarray(params.a)
    usq = np.stack(
        [np.sum(u[:, 2 * s.start : 2 * s.stop] ** 2, axis=-1) for s in params.block_slices()],
        axis=-1,
    )
    Ueta = np.sqrt(4.0 * np.sum(a**2 * usq, axis=-1)) * np.abs(eta)
    d = np.sqrt(dist.distance_squared_arrays(params, zsq, coords[:, -1]))
    d_err = float(np.max(np.abs(d - Ueta) / Ueta))
    rep.stats["distance_vs_speed_max"] = d_err
    rep.require(d_err <= 1e-8, "chart distance must equal U |eta|")

    # chart roundtrip through the inverse
    fac = polar._angle_factor_sq(np.multiply.outer(eta, params.pair_a))
    C = np.cos(2.0 * np.multiply.outer(eta, params.pair_a))
    S = np.sin(2.0 * np.multiply.outer(eta, params.pair_a))
    zx, zy = coords[:, 0 : 2 * params.n : 2], coords[:, 1 : 2 * params.n : 2]
    one_m_c = 1.0 - C
    back_re = (one_m_c * zx + S * zy) / fac
    back_im = (-S * zx + one_m_c * zy) / fac
    rt = max(
        float(np.max(np.abs(back_re - u[:, 0::2]))), float(np.max(np.abs(back_im - u[:, 1::2])))
    )
    rep.stats["chart_roundtrip_max"] = rt
    rep.require(rt <= 1e-10, "chart roundtrip above 1e-10")

    # closed form vs LU determinant, and the bordered recursion vs LU
    rng = philox(cfg.seed, 8)
    nj = min(count, 1000)
    worst_cf = 0.0
    for i in range(nj):
        pp = polar.polar_point_from_flat(params, u[i], float(eta[i]))
        M = polar.jacobian_matrix(params, pp)
        lu = float(np.linalg.det(M))
        cf = polar.jacobian_closed_form(params, pp)
        worst_cf = max(worst_cf, abs(lu - cf) / max(abs(lu), 1e-300))
    rep.stats["closed_form_vs_lu_max"] = worst_cf
    rep.require(worst_cf <= 1e-9, "closed-form Jacobian drifted from the LU determinant")

    worst_rec = 0.0
    for i in range(cfg.sizes["sparse_matrices"]):
        m = int(rng.integers(4, 9))
        M = rng.standard_normal((m, m))
        M[0, 2 : m - 1] = 0.0
        M[1, 2 : m - 1] = 0.0
        M[2 : m - 1, 0] = 0.0
        M[2 : m - 1, 1] = 0.0
        lu = float(np.linalg.det(M))
        rec = polar.det_bordered(M)
        worst_rec = max(worst_rec, abs(lu - rec) / max(abs(lu), 1e-12))
    rep.stats["recursion_vs_lu_max"] = worst_rec
    rep.require(worst_rec <= 1e-9, "bordered determinant recursion drifted from LU")

    # power-law comparison for J
    J = polar.jacobian_closed_form_arrays(params, usq, eta)
    comp = polar.jacobian_comparison_arrays(params, usq, eta)
    jr = J / comp
    rep.stats["jacobian_ratio_min"] = float(jr.min())
    rep.stats["jacobian_ratio_max"] = float(jr.max())
    rep.require(
        bool(np.isfinite(jr).all()) and float(jr.min()) > 0, "Jacobian comparison ratio degenerate"
    )

    # piecewise p*J comparison on the exterior cloud
    n_ext = max(count // 2, 200)
    ue, ee, labels, diag = polar.sample_exterior_cloud(params, n_ext, cfg.seed)
    usq_e = np.stack(
        [np.sum(ue[:, 2 * s.start : 2 * s.stop] ** 2, axis=-1) for s in params.block_slices()],
        axis=-1,
    )
    ce = polar.psi_flat(params, ue, ee)
    pe, _ = ker.kernel_points(params, 1.0, ce, cfg.quadrature)
    Je = polar.jacobian_closed_form_arrays(params, usq_e, ee)
    est = polar.pj_estimate_arrays(params, usq_e, ee)
    pj_ratio = pe * Je / est
    rep.stats["pj_ratio_min"] = float(pj_ratio.min())
    rep.stats["pj_ratio_max"] = float(pj_ratio.max())
    rep.stats["region_counts"] = {f"R{k}": int(v) for k, v in diag["per_region"].items()}
    rep.require(
        bool(np.isfinite(pj_ratio).all()) and float(pj_ratio.min()) > 0,
        "p*J comparison ratio degenerate",
    )

    # overlap consistency of the wide/narrow comparison formulas
    gap = math.pi - np.abs(ee)
    zone = (gap >= polar.ANGLE_MARGIN) & (gap <= polar.ANGLE_SPLIT)
    if np.any(zone):
        usz, esz = usq_e[zone], ee[zone]
        Usq, gapz, head, crowd = polar._region_quantities(params, usz, esz)
        gauss = np.exp(-Usq * esz**2 / 4.0)
        kl = params.k[-1]
        wide = np.sqrt(usz.sum(-1)) * np.abs(esz) ** (2 * params.n + 1) * gauss
        narrow = np.where(
            crowd >= polar.SIZE_SPLIT,
            np.sqrt(head * gapz + usz[..., -1]) * gapz ** (kl - 0.5) * gauss,
            (usz[..., -1] + np.sqrt(head) + np.sqrt(usz[..., -1]) * gapz) ** (kl - 1)
            * gapz ** (2 * kl - 1)
            * (head * gapz + usz[..., -1])
            * gauss,
        )
        ov = wide / narrow
        rep.stats["overlap_factor_min"] = float(ov.min())
        rep.stats["overlap_factor_max"] = float(ov.max())

    frozen = cfg.frozen_for("polar")
    if frozen:
        rep.frozen = dict(frozen)
        rep.require(
            jr.min() >= frozen["jacobian_ratio_min"] * 0.8
            and jr.max() <= frozen["jacobian_ratio_max"] * 1.2,
            "Jacobian power-law ratio left the frozen band",
        )
        rep.require(
            pj_ratio.min() >= frozen["pj_ratio_min"] * 0.8
            and pj_ratio.max() <= frozen["pj_ratio_max"] * 1.2,
            "p*J comparison ratio left the frozen band",
        )
    else:
        rep.notes.append("no frozen bounds for this group; band checks skipped")

    # horizontal path checks at a few chart points
    fam = standard_family(params, count=4, seed=cfg.seed + 17)
    worst_path = None
    for i in range(0, min(8, count)):
        pp = polar.polar_point_from_flat(params, u[i], float(eta[i]))
        pr = polar.horizontal_path_check(params, pp, fam[i % len(fam)])
        rep.require(bool(pr.passed), f"path check failed at sample {i}")
        worst_path = pr.stats
    rep.stats["last_path_check"] = worst_path

    cov = polar.check_change_of_variables(params)
    rep.stats["change_of_variables"] = dict(cov.stats)
    rep.require(bool(cov.passed), "pushforward integral mismatch")
    return rep


# ---------------------------------------------------------------------------
# ray-integral suite
# ---------------------------------------------------------------------------

def suite_lemma6(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    count = cfg.sizes["lemma6_points"]
    rep = VerificationReport(
        identifier="lemma6", config={"group": params.label(), "count": count}, seed=cfg.seed
    )
    u, eta, labels, diag = polar.sample_exterior_cloud(params, count, cfg.seed)
    sups = {1: 0.0, 2: 0.0, 3: 0.0}
    ratios = np.empty(count)
    for i in range(count):
        pp = polar.polar_point_from_flat(params, u[i], float(eta[i]))
        out = polar.ray_integral_check(params, pp, cfg.quadrature)
        ratios[i] = out["ratio"]
        sups[int(labels[i])] = max(sups[int(labels[i])], out["ratio"])
    rep.stats["region_counts"] = {f"R{k}": int(v) for k, v in diag["per_region"].items()}
    rep.stats["sup_ratio"] = float(np.max(ratios))
    rep.stats["per_region_sup"] = {f"R{k}": v for k, v in sorted(sups.items())}
    rep.stats["min_ratio"] = float(np.min(ratios))
    rep.require(bool(np.isfinite(ratios).all()), "ray-integral ratio not finite everywhere")
    rep.require(float(np.min(ratios)) > 0.0, "ray-integral ratio must be positive")
    rep.require(
        all(v > 0 for v in diag["per_region"].values()), "all three regions must be covered"
    )
    frozen = cfg.frozen_for("lemma6")
    if frozen:
        rep.frozen = dict(frozen)
        rep.require(
            within_band(rep.stats["sup_ratio"], frozen["sup_ratio"]),
            "ray-integral sup left the frozen band",
        )
    else:
        rep.notes.append("no frozen bounds for this group; band check skipped")
    return rep


# ---------------------------------------------------------------------------
# semigroup suites
# ---------------------------------------------------------------------------

def _family_and_points(cfg):
    params = cfg.group
    fam = standard_family(params, count=cfg.sizes["family"])
    pts_arr = uniform_box(params, CloudSpec(cfg.sizes["li_points"], 1.5, 2.0, cfg.seed), stream=14)
    return fam, [pts_arr[i] for i in range(pts_arr.shape[0])]


def suite_cheeger(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    fam, _ = _family_and_points(cfg)
    rep = VerificationReport(identifier="cheeger", config={"group": params.label()}, seed=cfg.seed)
    inner = sg.check_cheeger(
        params, fam, cfg.diffusion(), ball_count=cfg.sizes["ball_count"],
        frozen=cfg.frozen_for("cheeger"),
    )
    rep.stats.update(inner.stats)
    rep.exclusions = inner.exclusions
    if not cfg.frozen_for("cheeger"):
        rep.notes.append("no frozen bounds for this group; band checks skipped")
    rep.require(bool(inner.passed), "oscillation-ratio report failed")

    # dual-route ball average on a representative function; the midpoint
    # grid carries an O(1/points) boundary bias, so it only challenges the
    # Monte Carlo route in low dimension
    f = fam[2]
    m1, se1 = sg.ball_mean(params, f, "mc", count=cfg.sizes["ball_count"], seed=cfg.seed)
    if params.dim <= 3:
        m2, _ = sg.ball_mean(params, f, "grid", grid_points=40)
        pull = abs(m1 - m2) / max(se1, 1e-12)
        rep.stats["ball_mean_pull"] = pull
        rep.require(pull <= 3.0, "ball mean routes disagree beyond 3 SE")
    else:
        m2, se2 = sg.ball_mean(params, f, "mc", count=cfg.sizes["ball_count"], seed=cfg.seed + 1)
        pull = abs(m1 - m2) / math.sqrt(se1**2 + se2**2)
        rep.stats["ball_mean_pull"] = pull
        rep.require(pull <= 3.0, "independent ball means disagree beyond 3 SE")
    return rep


def suite_li(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    fam, points = _family_and_points(cfg)
    rep = VerificationReport(identifier="li", config={"group": params.label()}, seed=cfg.seed)

    li = sg.check_li_inequality(
        params, fam, points, cfg.h_values, cfg.diffusion(), frozen=cfg.frozen_for("li")
    )
    rep.stats["gradient_bound"] = dict(li.stats)
    rep.constant = li.constant
    rep.exclusions = li.exclusions
    if not cfg.frozen_for("li"):
        rep.notes.append("no frozen bounds for this group; band check skipped")
    rep.require(bool(li.passed), "gradient-bound report failed")

    # mass conservation
    one = indicator_like(params.dim, 60.0)
    val, se = sg.semigroup_estimate(params, one, 1.0, np.zeros(params.dim), "mc", cfg.diffusion(21))
    rep.stats["markov_value"] = val
    rep.require(abs(val - 1.0) <= 3.0 * max(se, 1e-12) + 1e-12, "mass conservation violated")

    # commutation and integration by parts on a mid-sized member
    f = fam[4]
    g0 = points[1]
    comm = sg.check_commutation(params, f, 1.0, g0, cfg.diffusion(22), method="mc")
    rep.stats["commutation_worst"] = comm.stats["worst_rel_error"]
    rep.require(bool(comm.passed), "commutation mismatch")

    if params.dim <= 3:
        ibp = sg.check_integration_by_parts(params, f, cfg.quadrature)
        rep.stats["integration_by_parts_worst"] = ibp.stats["worst_rel_error"]
        rep.require(bool(ibp.passed), "integration by parts mismatch")
        # a unit-scale function keeps the reduced gradient well away from
        # zero, so the relative comparison is meaningfully conditioned
        red = sg.check_translation_dilation_reduction(params, fam[2], 0.8, g0)
        rep.stats["reduction"] = dict(red.stats)
        rep.require(bool(red.passed), "translation-dilation reduction mismatch")

    # semigroup property via convolved samplers
    h1v, h2v = 0.5, 1.0
    W1 = sg.sample_heat_points(params, h1v, cfg.diffusion(23))
    W2 = sg.sample_heat_points(params, h2v, cfg.diffusion(24))
    W12 = sg.sample_heat_points(params, h1v + h2v, cfg.diffusion(25))
    from .groups import multiply_flat

    fsel = fam[6]
    two_stage = fsel.value(multiply_flat(params, W1, W2))
    one_stage = fsel.value(W12)
    pull = abs(float(np.mean(two_stage)) - float(np.mean(one_stage))) / math.sqrt(
        np.var(two_stage) / two_stage.size + np.var(one_stage) / one_stage.size + 1e-300
    )
    rep.stats["semigroup_property_pull"] = pull
    rep.require(pull <= 3.0, "semigroup property violated beyond 3 SE")

    holder = sg.check_holder_corollary(
        params, fam[:8], points[:4], cfg.h_values[:2], cfg.diffusion(), constant=max(li.constant, 1.0)
    )
    rep.stats["holder"] = dict(holder.stats)
    rep.require(bool(holder.passed), "exponent-2 consequence failed")
    return rep


def suite_lse_poe(cfg: RunConfig) -> VerificationReport:
    params = cfg.group
    fam, points = _family_and_points(cfg)
    rep = VerificationReport(identifier="lse-poe", config={"group": params.label()}, seed=cfg.seed)
    inner = sg.check_log_sobolev_poincare(
        params, fam, points[:8], cfg.h_values, cfg.diffusion(), frozen=cfg.frozen_for("lse-poe")
    )
    rep.stats.update(inner.stats)
    rep.exclusions = inner.exclusions
    if not cfg.frozen_for("lse-poe"):
        rep.notes.append("no frozen bounds for this group; band checks skipped")
    rep.require(bool(inner.passed), "entropy/variance report failed")

    # small-h scaling of the variance numerator
    f = fam[4]
    g0 = np.zeros(params.dim)
    ratios = []
    for hi, h in enumerate((0.1, 0.05)):
        W = sg.sample_heat_points(params, h, cfg.diffusion(60 + hi))
        from .groups import multiply_flat

        pts = multiply_flat(params, g0, W)
        phi = f.value(pts)
        gsq = sg.hgrad_norm_of(params, f, power=2).value(pts)
        ratios.append((float(np.mean(phi**2)) - float(np.mean(phi)) ** 2) / (h * float(np.mean(gsq))))
    rep.stats["small_h_ratios"] = ratios
    rep.require(
        0.5 <= ratios[1] / ratios[0] <= 2.0, "variance numerator is not O(h) at small h"
    )
    return rep


SUITE_RUNNERS = {
    "distance": suite_distance,
    "kernel": suite_kernel,
    "polar": suite_polar,
    "lemma6": suite_lemma6,
    "cheeger": suite_cheeger,
    "li": suite_li,
    "lse-poe": suite_lse_poe,
}


def run_suite(name: str, cfg: RunConfig) -> VerificationReport:
    if name not in SUITE_RUNNERS:
        raise ValueError(f"unknown suite {name!r}")
    return SUITE_RUNNERS[name](cfg)


def run_all(cfg: RunConfig):
    """Run the configured suites; returns (exit_code, {name: report})."""
    reports = {}
    for name in cfg.suites:
        reports[name] = run_suite(name, cfg)
    failed = [n for n, r in reports.items() if not r.passed]
    return (1 if failed else 0), reports
