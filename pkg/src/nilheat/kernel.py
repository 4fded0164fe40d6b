"""Heat kernel evaluation by deterministic panel quadrature.

After folding the Fourier integral onto [0, inf), the kernel at (z, t)
for time h is

    p_h(z, t) = (4 pi h)^{-(n+1)} * I,
    I = int_0^inf cos(lambda t / 4h) E(lambda) dlambda,
    E = prod_j (a_j lambda / sinh(a_j lambda))^{k_j}
        * exp(-sum_j |z_j|^2 a_j lambda coth(a_j lambda) / 4h).

E is smooth, even, positive, bounded by 1, and decays at the exponential
rate r(lambda) -> sum_j k_j a_j + sum_j |z_j|^2 a_j/(4h).  The integral is
computed with 15-point Gauss-Legendre panels sized to resolve the cosine
(>= `osc_factor` panels per period) and refined adaptively where an
embedded 7-point rule disagrees.  The cutoff is placed where the local
tail bound E(L)/r(L) falls below a tenth of the tolerance.  All reduction
is plain `np.sum` (pairwise, single threaded), so results are bit-stable.

Tolerances are relative to the envelope integral int E dlambda.  Because
the cosine may cancel most of the envelope, the achievable *relative*
accuracy of p degrades by roughly exp((d^2 - |z|^2)/4h); the error field
of KernelValue accounts for this through a floating-noise floor, and
`distance.cancellation_exponent` predicts it.  Sample clouds should stay
within a cancellation budget of ~25 log-units.

Derivatives are taken under the integral sign (the decay is exponential,
so differentiation and integration commute): each d/dx_{i,j} pulls down
-x_{i,j} a_i lambda coth(a_i lambda)/(2h) and d/dt turns the cosine into
-lambda sin(.)/(4h).  Finite differences are used only as test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distance import distance_squared_arrays, solve_theta_arrays
from .groups import (
    GroupParams,
    GroupPoint,
    block_norms_sq,
    block_norms_sq_flat,
    horizontal_components,
)
from .reports import VerificationReport

__all__ = [
    "QuadratureSpec",
    "KernelValue",
    "QuadratureError",
    "KernelConditioningError",
    "kernel",
    "kernel_zsq",
    "kernel_points",
    "kernel_derivatives",
    "log_kernel_left_gradient",
    "log_kernel_t_derivative",
    "check_scaling",
    "kernel_comparison_log_rhs",
    "check_kernel_comparison",
    "integrate_radial",
]

_POSITIVITY_FLOOR = 1e-300


class QuadratureError(RuntimeError):
    """Panel budget or cutoff cap hit before the error target was met."""


class KernelConditioningError(RuntimeError):
    """Kernel value too small or too noisy for the requested quantity."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the lambda integral.

    tol: target error relative to the envelope integral.
    lambda_max: hard cutoff cap.
    panel_budget: maximum number of panels.
    osc_factor: minimum panels per cosine period.
    """

    tol: float = 1e-10
    lambda_max: float = 400.0
    panel_budget: int = 4096
    osc_factor: float = 8.0

    def __post_init__(self):
        if self.tol <= 0 or self.lambda_max <= 0 or self.panel_budget < 8:
            raise ValueError("invalid quadrature spec")


@dataclass(frozen=True)
class KernelValue:
    value: float
    error: float


_GL15 = np.polynomial.legendre.leggauss(15)
_GL7 = np.polynomial.legendre.leggauss(7)


def _w_over_sinh_log(x):
    """log(x/sinh x) for x >= 0, stable for both tiny and large x."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    big = xs > 30.0
    xm = np.where(big, 1.0, xs)
    mid = np.log(xm / np.sinh(xm))
    large = np.log(2.0 * xs) - xs - np.log1p(-np.exp(-2.0 * xs))
    out = np.where(big, large, mid)
    x2 = x * x
    series = -x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    return np.where(small, series, out)


def _x_coth(x):
    """x coth x for x >= 0 with series near 0."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    big = xs > 30.0
    xm = np.where(big, 1.0, xs)
    mid = xm / np.tanh(xm)
    out = np.where(big, xs, mid)
    x2 = x * x
    series = 1.0 + x2 / 3.0 - x2 * x2 / 45.0
    return np.where(small, series, out)


def _log_envelope(params: GroupParams, h, zsq, lam):
    """log E(lambda).  lam: any shape; zsq: broadcastable to lam shape + (l,)."""
    a = np.asarray(params.a)
    k = np.asarray(params.k, dtype=float)
    x = np.asarray(lam, dtype=float)[..., None] * a
    logw = np.sum(k * _w_over_sinh_log(x), axis=-1)
    s = np.sum(np.asarray(zsq, dtype=float) * _x_coth(x), axis=-1)
    return logw - s / (4.0 * h)


def _decay_rate(params: GroupParams, h, zsq, lam):
    """-d log E / d lambda; increases monotonically to its asymptote."""
    a = np.asarray(params.a)
    k = np.asarray(params.k, dtype=float)
    x = np.asarray(lam, dtype=float)[..., None] * a
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    coth = np.where(xs > 30.0, 1.0, 1.0 / np.tanh(np.minimum(xs, 30.0)))
    geom = np.where(small, x / 3.0, coth - 1.0 / xs)
    dxcoth = np.where(small, 2.0 * x / 3.0, coth - xs * (coth**2 - 1.0))
    rate = np.sum(k * a * geom, axis=-1)
    rate = rate + np.sum(np.asarray(zsq, dtype=float) * a * dxcoth, axis=-1) / (4.0 * h)
    return rate


def _panel_nodes(edges):
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes15 = mid[:, None] + half[:, None] * _GL15[0]
    nodes7 = mid[:, None] + half[:, None] * _GL7[0]
    return nodes15, nodes7, half


def _eval_panels(params, h, zsq, tau, edges, want_extras=False):
    """Per-panel GL15/GL7 cosine sums, envelope sums, optional moments."""
    a = np.asarray(params.a)
    m = zsq.shape[0]
    nodes15, nodes7, half = _panel_nodes(edges)
    P = edges.size - 1
    pan15 = np.empty((m, P))
    pan7 = np.empty((m, P))
    env15 = np.empty((m, P))
    extras = None
    if want_extras:
        extras = {"coth": np.empty((m, params.l)), "sin": np.empty(m)}
        cothw = _x_coth(nodes15[..., None] * a)  # (P, 15, l)
    chunk = max(1, int(4e6 // max(nodes15.size, 1)))
    for s in range(0, m, chunk):
        e = min(m, s + chunk)
        E15 = np.exp(
            _log_envelope(params, h, zsq[s:e, None, None, :], nodes15[None, :, :])
        )  # (c, P, 15)
        E7 = np.exp(
            _log_envelope(params, h, zsq[s:e, None, None, :], nodes7[None, :, :])
        )
        c15 = np.cos(tau[s:e, None, None] * nodes15)
        c7 = np.cos(tau[s:e, None, None] * nodes7)
        w15 = E15 * _GL15[1]
        pan15[s:e] = np.sum(c15 * w15, axis=-1) * half
        pan7[s:e] = np.sum(c7 * E7 * _GL7[1], axis=-1) * half
        env15[s:e] = np.sum(w15, axis=-1) * half
        if want_extras:
            cw = c15 * w15  # (c, P, 15)
            extras["coth"][s:e] = np.sum(
                np.sum(cw[..., None] * cothw, axis=-2) * half[:, None], axis=-2
            )
            s15 = np.sin(tau[s:e, None, None] * nodes15)
            extras["sin"][s:e] = np.sum(
                np.sum(s15 * w15 * nodes15, axis=-1) * half, axis=-1
            )
    return pan15, pan7, env15, extras


def _integral_core(params, h, zsq, t, spec, derivs=False):
    """Shared-grid quadrature for a batch of points.

    zsq: (m, l), t: (m,).  Returns the cosine integral, envelope integral,
    error estimate, and optionally the derivative moments.
    """
    zsq = np.atleast_2d(np.asarray(zsq, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    m = zsq.shape[0]
    a = np.asarray(params.a)
    k = np.asarray(params.k, dtype=float)

    # cutoff: probe log E and stop where the local tail bound is small
    r_inf = float(np.sum(k * a)) + float(np.min(np.sum(zsq * a, axis=-1))) / (4.0 * h)
    lam_hi = min(spec.lambda_max, max(90.0 / r_inf, 5.0))
    probe = np.linspace(0.0, lam_hi, 385)
    logE = _log_envelope(params, h, zsq[:, None, :], probe[None, :])  # (m, 385)
    env_probe = np.exp(logE)
    env_est = np.maximum(np.trapezoid(env_probe, probe, axis=-1), 1e-300)  # (m,)
    rate = _decay_rate(params, h, zsq[:, None, :], probe[None, :])
    tail_bound = env_probe / np.maximum(rate, 1e-300)
    tail_ok = tail_bound <= 0.1 * spec.tol * env_est[:, None]
    tail_ok[:, 0] = False
    if not bool(tail_ok.any(axis=-1).all()):
        raise QuadratureError(
            f"tail bound tol/10 not reachable below lambda_max={spec.lambda_max}"
        )
    idx = np.argmax(tail_ok, axis=-1)
    lam_cut = float(np.max(probe[idx]))
    tail = tail_bound[np.arange(m), idx]

    # initial panelization: resolve the cosine and the decay scale
    tau = t / (4.0 * h)
    tau_max = float(np.max(np.abs(tau)))
    npan = 24
    if tau_max > 0:
        period = 2.0 * math.pi / tau_max
        npan = max(npan, int(math.ceil(lam_cut / period * spec.osc_factor)))
    npan = max(npan, int(math.ceil(lam_cut * r_inf / 6.0)))
    if npan > spec.panel_budget:
        raise QuadratureError(
            f"needs {npan} panels to resolve the integrand, budget {spec.panel_budget}"
        )
    edges = np.linspace(0.0, lam_cut, npan + 1)

    # adaptive refinement driven by the GL15-vs-GL7 disagreement
    for _ in range(10):
        pan15, pan7, env15, _ = _eval_panels(params, h, zsq, tau, edges)
        perr = np.abs(pan15 - pan7)
        total_err = perr.sum(axis=-1)
        target = spec.tol * env_est
        if np.all(total_err <= target):
            break
        P = edges.size - 1
        if P >= spec.panel_budget:
            raise QuadratureError(
                f"panel budget {spec.panel_budget} exhausted; worst error "
                f"{float(np.max(total_err / target)):.3g}x target"
            )
        worst = perr.max(axis=0)
        thresh = max(float(np.min(target)) / P * 0.5, float(worst.max()) * 0.05)
        split = worst > thresh
        if not split.any():
            split = worst >= float(worst.max()) * 0.5
        new_edges = [edges[0]]
        for i in range(P):
            if split[i]:
                new_edges.append(0.5 * (edges[i] + edges[i + 1]))
            new_edges.append(edges[i + 1])
        edges = np.asarray(new_edges)
        if edges.size - 1 > spec.panel_budget:
            raise QuadratureError(
                f"panel budget {spec.panel_budget} exceeded during refinement"
            )
    else:
        raise QuadratureError("adaptive refinement failed to converge")

    extras = None
    if derivs:
        _, _, _, extras = _eval_panels(params, h, zsq, tau, edges, want_extras=True)
    env_int = env15.sum(axis=-1)
    noise = np.finfo(float).eps * env_int * 4.0
    return {
        "cos": pan15.sum(axis=-1),
        "env": env_int,
        "err": perr.sum(axis=-1) + tail + noise,
        "extras": extras,
        "edges": edges,
    }


def _batched_core(params, h, zs, ts, spec, derivs=False, chunk=16384):
    """Sort points by |t| (so each chunk's panel count matches its own
    oscillation), run the core per chunk, and restore the input order."""
    m = zs.shape[0]
    order = np.argsort(np.abs(ts), kind="stable")
    inv = np.empty(m, dtype=np.intp)
    inv[order] = np.arange(m)
    cos = np.empty(m)
    err = np.empty(m)
    env = np.empty(m)
    extras = {"coth": np.empty((m, params.l)), "sin": np.empty(m)} if derivs else None
    for s in range(0, m, chunk):
        sel = order[s : s + chunk]
        out = _integral_core(params, h, zs[sel], ts[sel], spec, derivs)
        cos[sel] = out["cos"]
        err[sel] = out["err"]
        env[sel] = out["env"]
        if derivs:
            extras["coth"][sel] = out["extras"]["coth"]
            extras["sin"][sel] = out["extras"]["sin"]
    return {"cos": cos, "err": err, "env": env, "extras": extras}


def kernel_zsq(params: GroupParams, h: float, zsq, t, spec=None):
    """Kernel values from block norms: zsq (..., l), t (...).

    Returns (values, errors) with the (4 pi h)^{-(n+1)} prefactor applied.
    """
    if h <= 0:
        raise ValueError("time parameter h must be positive")
    spec = spec or QuadratureSpec()
    zsq = np.asarray(zsq, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(zsq.shape[:-1], t.shape)
    zs = np.ascontiguousarray(np.broadcast_to(zsq, shape + (params.l,)).reshape(-1, params.l))
    ts = np.ascontiguousarray(np.broadcast_to(t, shape).reshape(-1))
    norm = (4.0 * math.pi * h) ** (-(params.n + 1))
    out = _batched_core(params, h, zs, ts, spec)
    vals = (norm * out["cos"]).reshape(shape)
    errs = (norm * out["err"]).reshape(shape)
    return vals, errs


def kernel(params: GroupParams, h: float, g: GroupPoint, spec=None) -> KernelValue:
    """Heat kernel p_h at a point, with an error estimate."""
    vals, errs = kernel_zsq(params, h, block_norms_sq(g), g.t, spec)
    v = float(vals)
    if v <= _POSITIVITY_FLOOR:
        raise KernelConditioningError("kernel value at or below the positivity floor")
    return KernelValue(v, float(errs))


def kernel_points(params: GroupParams, h: float, coords, spec=None):
    """Batch kernel over flat coordinate arrays (..., 2n+1)."""
    coords = np.asarray(coords, dtype=float)
    zsq = block_norms_sq_flat(params, coords)
    return kernel_zsq(params, h, zsq, coords[..., -1], spec)


def kernel_product_grid(params: GroupParams, h: float, zsq, tvals, spec=None):
    """Kernel on the product of a block-norm set and a t set.

    zsq: (m1, l), tvals: (m2,).  Returns (values, errors) of shape
    (m1, m2).  All pairs share one panelization, so the cosine transform
    becomes a single matrix contraction; the error estimate compares the
    working grid against one with doubled panels.  Intended for tensor
    grids where evaluating every (z, t) pair separately would repeat the
    envelope work m2 times.
    """
    if h <= 0:
        raise ValueError("time parameter h must be positive")
    spec = spec or QuadratureSpec(tol=1e-9)
    zsq = np.atleast_2d(np.asarray(zsq, dtype=float))
    tvals = np.atleast_1d(np.asarray(tvals, dtype=float))
    m1 = zsq.shape[0]
    a = np.asarray(params.a)
    k = np.asarray(params.k, dtype=float)

    r_inf = float(np.sum(k * a)) + float(np.min(np.sum(zsq * a, axis=-1))) / (4.0 * h)
    lam_hi = min(spec.lambda_max, max(90.0 / r_inf, 5.0))
    probe = np.linspace(0.0, lam_hi, 385)
    slow = np.argmin(np.sum(zsq * a, axis=-1))
    logE = _log_envelope(params, h, zsq[slow], probe)
    envp = np.exp(logE)
    env_est = max(float(np.trapezoid(envp, probe)), 1e-300)
    rate = _decay_rate(params, h, zsq[slow], probe)
    ok = envp / np.maximum(rate, 1e-300) <= 0.1 * spec.tol * env_est
    ok[0] = False
    if not ok.any():
        raise QuadratureError("tail bound not reachable below lambda_max")
    lam_cut = float(probe[np.argmax(ok)])
    tail = np.exp(_log_envelope(params, h, zsq, np.full(m1, lam_cut))) / np.maximum(
        _decay_rate(params, h, zsq, np.full(m1, lam_cut)), 1e-300
    )

    tau = tvals / (4.0 * h)
    tau_max = float(np.max(np.abs(tau)))
    npan = 24
    if tau_max > 0:
        npan = max(npan, int(math.ceil(lam_cut * tau_max / (2.0 * math.pi) * spec.osc_factor)))
    npan = max(npan, int(math.ceil(lam_cut * r_inf / 6.0)))
    if 2 * npan > spec.panel_budget:
        raise QuadratureError("panel budget exceeded on the product grid")

    def _value(npanels):
        edges = np.linspace(0.0, lam_cut, npanels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * _GL15[0]).ravel()
        wts = (half[:, None] * _GL15[1]).ravel()
        out = np.empty((m1, tvals.size))
        cosM = np.cos(np.multiply.outer(tau, nodes))  # (m2, N)
        chunk = max(1, int(8e6 // max(nodes.size, 1)))
        for s in range(0, m1, chunk):
            e = min(m1, s + chunk)
            Ew = np.exp(_log_envelope(params, h, zsq[s:e, None, :], nodes[None, :])) * wts
            out[s:e] = Ew @ cosM.T
        return out

    v_coarse = _value(npan)
    v_fine = _value(2 * npan)
    norm = (4.0 * math.pi * h) ** (-(params.n + 1))
    err = np.abs(v_fine - v_coarse) + tail[:, None] + np.finfo(float).eps * 4.0 / max(r_inf, 1e-3)
    return norm * v_fine, norm * err


def kernel_derivatives(params: GroupParams, h: float, coords, spec=None):
    """Kernel and its Euclidean partials at flat points (..., 2n+1).

    Returns dict with 'p' (...), 'dp' (..., 2n+1), 'err' (...).
    """
    if h <= 0:
        raise ValueError("time parameter h must be positive")
    spec = spec or QuadratureSpec()
    coords = np.asarray(coords, dtype=float)
    shape = coords.shape[:-1]
    flat = coords.reshape(-1, params.dim)
    zsq = block_norms_sq_flat(params, flat)
    norm = (4.0 * math.pi * h) ** (-(params.n + 1))
    out = _batched_core(params, h, zsq, np.ascontiguousarray(flat[:, -1]), spec, derivs=True)
    p = norm * out["cos"]
    coth_int = norm * out["extras"]["coth"]  # (m, l)
    sin_int = norm * out["extras"]["sin"]  # (m,)
    n = params.n
    dp = np.empty((flat.shape[0], params.dim))
    x = flat[:, 0 : 2 * n : 2]
    y = flat[:, 1 : 2 * n : 2]
    wblk = coth_int[:, params.pair_block]
    dp[:, 0 : 2 * n : 2] = -x / (2.0 * h) * wblk
    dp[:, 1 : 2 * n : 2] = -y / (2.0 * h) * wblk
    dp[:, 2 * n] = -sin_int / (4.0 * h)
    return {
        "p": p.reshape(shape),
        "dp": dp.reshape(shape + (params.dim,)),
        "err": (norm * out["err"]).reshape(shape),
    }


def _require_conditioned(p, err):
    if np.any(p <= _POSITIVITY_FLOOR):
        raise KernelConditioningError("kernel value at or below the positivity floor")
    if np.any(err > 0.5 * np.abs(p)):
        raise KernelConditioningError(
            "quadrature error comparable to the kernel value; "
            "point lies outside the well-conditioned zone"
        )


def log_kernel_left_gradient(params: GroupParams, h: float, g: GroupPoint, spec=None):
    """Horizontal components (X ln p_h, Y ln p_h, ...) as a 2n vector."""
    coords = g.flat()
    out = kernel_derivatives(params, h, coords, spec)
    _require_conditioned(out["p"], out["err"])
    egrad = out["dp"] / out["p"]
    return horizontal_components(params, egrad, coords, which="left")


def log_kernel_t_derivative(params: GroupParams, h: float, g: GroupPoint, spec=None) -> float:
    out = kernel_derivatives(params, h, g.flat(), spec)
    _require_conditioned(out["p"], out["err"])
    return float(out["dp"][..., -1] / out["p"])


def check_scaling(params: GroupParams, h: float, g: GroupPoint, spec=None) -> VerificationReport:
    """Scaling law: h^{n+1} p_h(z, t) against p_1(z/sqrt h, t/h)."""
    spec = spec or QuadratureSpec()
    left = kernel(params, h, g, spec)
    scaled = GroupPoint(tuple(b / math.sqrt(h) for b in g.z), g.t / h)
    right = kernel(params, 1.0, scaled, spec)
    dev = abs(h ** (params.n + 1) * left.value - right.value) / right.value
    rel_err = left.error / left.value + right.error / right.value
    rep = VerificationReport(
        identifier="kernel-scaling",
        config={"h": h, "group": params.label()},
        stats={"deviation": dev, "error_budget": 10.0 * rel_err},
    )
    rep.require(dev <= 10.0 * rel_err, "scaling deviation exceeds quadrature error budget")
    return rep


def kernel_comparison_log_rhs(params: GroupParams, zsq, t):
    """Log of the two-sided comparison quantity for p_1 at interior points.

    Combines the distance Gaussian with the algebraic prefactor built from
    eps0 = sin(theta)/theta, |z|, and the top block norm |z_l|.
    """
    zsq = np.asarray(zsq, dtype=float)
    t = np.asarray(t, dtype=float)
    d2, theta, branch, _ = distance_squared_arrays(params, zsq, t, return_parts=True)
    if np.any(branch == 2):
        raise ValueError("comparison quantity is defined on interior branches only")
    eps = np.sinc(theta / math.pi)
    zn = np.sqrt(np.sum(zsq, axis=-1))
    zl = zsq[..., -1]
    first = -0.5 * np.log1p(zn**2 * eps**2 + zl / eps)
    second = (params.k[-1] - 1) * (
        np.log1p(zn + zl / eps**2) - np.log1p(zn * eps + zl / eps)
    )
    return first + second - d2 / 4.0


def check_kernel_comparison(params: GroupParams, coords, spec=None, frozen=None) -> VerificationReport:
    """Ratio of p_1 to the comparison quantity over an interior-branch cloud.

    Boundary-branch points are excluded and counted.  The verdict asks for
    finite positive extremes and, when frozen bounds are supplied,
    containment in the recorded band.
    """
    spec = spec or QuadratureSpec()
    coords = np.asarray(coords, dtype=float)
    zsq = block_norms_sq_flat(params, coords)
    t = coords[..., -1]
    _, branch, _ = solve_theta_arrays(params, zsq, t)
    keep = branch != 2
    excluded = int(np.sum(~keep))
    zsq, t = zsq[keep], t[keep]
    vals, errs = kernel_zsq(params, 1.0, zsq, t, spec)
    _require_conditioned(vals, errs)
    ratio = np.exp(np.log(vals) - kernel_comparison_log_rhs(params, zsq, t))
    rep = VerificationReport(
        identifier="kernel-two-sided-comparison",
        config={"group": params.label(), "points": int(ratio.size)},
        stats={"ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())},
        exclusions=excluded,
    )
    rep.require(
        bool(np.isfinite(ratio).all()) and float(ratio.min()) > 0,
        "ratios must be finite and positive",
    )
    if frozen:
        rep.frozen = dict(frozen)
        rep.require(
            ratio.min() >= frozen["ratio_min"] * 0.8
            and ratio.max() <= frozen["ratio_max"] * 1.2,
            "comparison ratio extremes left the frozen band",
        )
    return rep


def _sphere_surface(kdim: int) -> float:
    """Surface measure of the unit sphere in C^k = R^{2k}: 2 pi^k/(k-1)!."""
    return 2.0 * math.pi**kdim / math.factorial(kdim - 1)


def _composite_gl(lo, hi, panel_width, points):
    """Composite Gauss-Legendre nodes/weights on [lo, hi]."""
    npan = max(1, int(math.ceil((hi - lo) / panel_width)))
    edges = np.linspace(lo, hi, npan + 1)
    gl_x, gl_w = np.polynomial.legendre.leggauss(points)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gl_x).ravel()
    wts = (half[:, None] * gl_w).ravel()
    return nodes, wts


def integrate_radial(params: GroupParams, func, rho_max, t_max, points=16, scale=1.0):
    """Integrate func over the whole group assuming it depends on z only
    through the block norms.  Reduces to an (l+1)-dim composite tensor
    Gauss rule with the block surface factors rho^{2k-1}; `scale` sets the
    panel width (use sqrt(h) scaling in rho and h scaling in t so the
    kernel's analyticity strip is resolved).

    func maps (zsq (..., l), t (...)) -> values (...).
    """
    rho_max = np.broadcast_to(np.asarray(rho_max, dtype=float), (params.l,))
    axes_nodes, axes_weights = [], []
    for j in range(params.l):
        nodes, wts = _composite_gl(0.0, rho_max[j], 1.5 * math.sqrt(scale), points)
        wts = wts * _sphere_surface(params.k[j]) * nodes ** (2 * params.k[j] - 1)
        axes_nodes.append(nodes)
        axes_weights.append(wts)
    t_nodes, t_wts = _composite_gl(-t_max, t_max, 2.5 * scale, points)
    axes_nodes.append(t_nodes)
    axes_weights.append(t_wts)

    mesh = np.meshgrid(*axes_nodes, indexing="ij")
    zsq = np.stack([mesh[j] ** 2 for j in range(params.l)], axis=-1)
    vals = func(zsq, mesh[-1])
    w = axes_weights[0]
    for ww in axes_weights[1:]:
        w = np.multiply.outer(w, ww)
    return float(np.sum(vals * w))
