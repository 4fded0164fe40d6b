"""Heat semigroup by diffusion Monte Carlo and kernel quadrature, plus the
inequality verification harness.

Two independent evaluation routes are kept everywhere it is feasible:

  mc          average f(g . W) over endpoints W of the horizontal diffusion
              (2n driving Brownian coordinates, the center coordinate
              accumulated as a weighted Levy area with the trapezoidal
              rule); weak error O(steps^-1).
  quadrature  integrate f(g . g') p_h(g') over a tensor grid covering the
              translated support of f, with kernel values from the panel
              quadrature.

Disagreement between the routes beyond combined error bars is treated as
a build-stopping signal by the test suite.

Gradients of the semigroup are taken by differentiating under the
convolution: for fixed w, the left frame applied to g -> f(g . w) is

  X_{i,j}: f_x(g.w) + 2 a_i (y_{i,j}(g) - Im w_{i,j}) f_t(g.w)
  Y_{i,j}: f_y(g.w) + 2 a_i (Re w_{i,j} - x_{i,j}(g)) f_t(g.w)

(the right frame replaces the coefficients with the coordinate values of
g . w itself, which is the commutation identity).  At g = 0 the X
coefficient reduces to -2 a_i Im(w), i.e. the right-invariant frame
applied to f at w.

All randomness is Philox counter-based keyed by (seed, stream, chunk), so
results do not depend on chunking or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distance import distance_squared_arrays
from .groups import (
    GroupParams,
    block_norms_sq_flat,
    horizontal_components,
    multiply_flat,
)
from .kernel import (
    QuadratureSpec,
    kernel_derivatives,
    kernel_points,
    kernel_product_grid,
)
from .reports import VerificationReport
from .sampling import ball_bounding_box, philox

__all__ = [
    "DiffusionSpec",
    "sample_heat_points",
    "right_field_of",
    "hgrad_norm_of",
    "semigroup_apply",
    "semigroup_estimate",
    "grad_semigroup",
    "grad_semigroup_components",
    "ball_mean",
    "check_li_inequality",
    "check_commutation",
    "check_cheeger",
    "check_log_sobolev_poincare",
    "check_holder_corollary",
    "check_translation_dilation_reduction",
    "check_integration_by_parts",
    "TransformedField",
]


@dataclass(frozen=True)
class DiffusionSpec:
    """Horizontal diffusion sampler controls.

    steps: Euler steps over the horizon (>= 100 for acceptance runs);
    paths: number of endpoints (>= 1e4 for acceptance runs);
    seed/stream: Philox key material; chunk: paths per RNG block.
    """

    steps: int = 200
    paths: int = 10000
    seed: int = 0
    stream: int = 0
    chunk: int = 8192
    workers: int = 1

    def __post_init__(self):
        if self.steps < 100:
            raise ValueError("diffusion needs at least 100 steps")
        if self.paths < 1 or self.chunk < 1:
            raise ValueError("invalid diffusion spec")

    def with_stream(self, stream: int) -> "DiffusionSpec":
        return DiffusionSpec(self.steps, self.paths, self.seed, stream, self.chunk, self.workers)


def _simulate_chunk(params: GroupParams, h: float, spec: DiffusionSpec, idx: int, count: int):
    """One RNG block of diffusion endpoints; key = (seed, stream<<20 | idx)."""
    rng = philox(spec.seed, (spec.stream << 20) | idx)
    n = params.n
    a = params.pair_a
    dt_scale = math.sqrt(2.0 * h / spec.steps)
    z = np.zeros((count, 2 * n))
    t = np.zeros(count)
    for _ in range(spec.steps):
        d = rng.standard_normal((count, 2 * n)) * dt_scale
        dx, dy = d[:, 0::2], d[:, 1::2]
        x, y = z[:, 0::2], z[:, 1::2]
        # trapezoidal Levy area: midpoint values against the increments
        t += 2.0 * np.sum(a * ((y + 0.5 * dy) * dx - (x + 0.5 * dx) * dy), axis=-1)
        z += d
    out = np.empty((count, params.dim))
    out[:, : 2 * n] = z
    out[:, 2 * n] = t
    return out


def sample_heat_points(params: GroupParams, h: float, spec: DiffusionSpec) -> np.ndarray:
    """Endpoints of the horizontal diffusion, approximately p_h distributed.

    The z marginal is exactly Gaussian (variance 2h per coordinate, so
    E|z|^2 = 4 n h); the center coordinate carries the O(steps^-1) weak
    error of the Levy-area discretization.
    """
    if h <= 0:
        raise ValueError("time parameter h must be positive")
    sizes = []
    start = 0
    while start < spec.paths:
        sizes.append(min(spec.chunk, spec.paths - start))
        start += spec.chunk
    out = np.empty((spec.paths, params.dim))

    def run(i):
        return i, _simulate_chunk(params, h, spec, i, sizes[i])

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run, range(len(sizes))))
    else:
        results = [run(i) for i in range(len(sizes))]
    for i, block in results:
        off = i * spec.chunk
        out[off : off + block.shape[0]] = block
    return out


def sample_heat_point(params: GroupParams, h: float, spec: DiffusionSpec):
    """A single diffusion endpoint as a GroupPoint."""
    from .groups import GroupPoint

    one = DiffusionSpec(spec.steps, 1, spec.seed, spec.stream, spec.chunk, 1)
    return GroupPoint.from_flat(params, sample_heat_points(params, h, one)[0])


# ---------------------------------------------------------------------------
# Derived scalar fields
# ---------------------------------------------------------------------------

class _Closure:
    """Value-only field from a callable on flat coordinates."""

    def __init__(self, fn, box=None):
        self._fn = fn
        self._box = box

    def value(self, coords):
        return self._fn(np.asarray(coords, dtype=float))

    def support_box(self):
        if self._box is None:
            raise AttributeError("closure has no support box")
        return self._box


def right_field_of(params: GroupParams, which, f):
    """The scalar field (right-invariant frame applied to f)."""
    i, j, kind = which
    pair = sum(params.k[:i]) + j
    ai = params.a[i]
    col = 2 * pair if kind == "x" else 2 * pair + 1

    def fn(coords):
        grad = f.gradient(coords)
        if kind == "x":
            coef = -2.0 * ai * coords[..., 2 * pair + 1]
        else:
            coef = 2.0 * ai * coords[..., 2 * pair]
        return grad[..., col] + coef * grad[..., 2 * params.n]

    return _Closure(fn, box=f.support_box())


def hgrad_norm_of(params: GroupParams, f, power=1):
    """|grad f|^power as a scalar field (left horizontal frame)."""

    def fn(coords):
        comps = horizontal_components(params, f.gradient(coords), coords, "left")
        nrm = np.sqrt(np.sum(comps**2, axis=-1))
        return nrm if power == 1 else nrm**power

    return _Closure(fn, box=f.support_box())


class TransformedField:
    """f composed with g' -> g . dilate(r, g'); value and gradient."""

    def __init__(self, params: GroupParams, f, g_flat, r: float):
        self.params = params
        self.f = f
        self.g_flat = np.asarray(g_flat, dtype=float)
        self.r = float(r)

    def _map(self, coords):
        coords = np.asarray(coords, dtype=float)
        scaled = coords * self.r
        scaled[..., -1] = coords[..., -1] * self.r * self.r
        return multiply_flat(self.params, self.g_flat, scaled)

    def support_box(self):
        """Preimage bound of f's support under g' -> g . dilate(r, g')."""
        params, r = self.params, self.r
        lo, hi = self.f.support_box()
        n = params.n
        z_lo = (lo[: 2 * n] - self.g_flat[: 2 * n]) / r
        z_hi = (hi[: 2 * n] - self.g_flat[: 2 * n]) / r
        twist = 0.0
        start = 0
        for i, ki in enumerate(params.k):
            gz = self.g_flat[2 * start : 2 * (start + ki)]
            sup = math.sqrt(
                float(
                    np.sum(
                        np.maximum(
                            np.abs(z_lo[2 * start : 2 * (start + ki)]),
                            np.abs(z_hi[2 * start : 2 * (start + ki)]),
                        )
                        ** 2
                    )
                )
            )
            twist += 2.0 * params.a[i] * math.sqrt(float(np.sum(gz**2))) * sup
            start += ki
        t_lo = (lo[-1] - self.g_flat[-1] - r * twist) / (r * r)
        t_hi = (hi[-1] - self.g_flat[-1] + r * twist) / (r * r)
        return np.concatenate([z_lo, [t_lo]]), np.concatenate([z_hi, [t_hi]])

    def value(self, coords):
        return self.f.value(self._map(coords))

    def gradient(self, coords):
        params = self.params
        n = params.n
        a = params.pair_a
        g = self.f.gradient(self._map(coords))
        gt = g[..., 2 * n]
        xg = self.g_flat[0 : 2 * n : 2]
        yg = self.g_flat[1 : 2 * n : 2]
        out = np.empty(g.shape)
        out[..., 0 : 2 * n : 2] = self.r * (g[..., 0 : 2 * n : 2] + 2.0 * a * yg * gt[..., None])
        out[..., 1 : 2 * n : 2] = self.r * (g[..., 1 : 2 * n : 2] - 2.0 * a * xg * gt[..., None])
        out[..., 2 * n] = self.r * self.r * gt
        return out


# ---------------------------------------------------------------------------
# Convolution evaluation
# ---------------------------------------------------------------------------

def _support_grid(params, f, grid_points, h=None, g_flat=None):
    """Composite tensor GL nodes/weights covering f's support box.

    When (h, g) are supplied the box is intersected with the kernel's
    effective reach around g (|z'| within ~10 sqrt(h), center coordinate
    within ~40 h plus the translation twist); otherwise a small-h kernel
    spike occupies a vanishing fraction of the support box and the tensor
    rule cannot see it.  Axes longer than the shortest one get
    proportionally more panels.  Returns None when the intersection is
    empty (the convolution is then negligible at the working tolerance).
    """
    lo, hi = f.support_box()
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    if h is not None and g_flat is not None:
        n = params.n
        reach_z = 10.0 * math.sqrt(h)
        lo[: 2 * n] = np.maximum(lo[: 2 * n], g_flat[: 2 * n] - reach_z)
        hi[: 2 * n] = np.minimum(hi[: 2 * n], g_flat[: 2 * n] + reach_z)
        twist = 0.0
        start = 0
        for i, ki in enumerate(params.k):
            gz = g_flat[2 * start : 2 * (start + ki)]
            twist += (
                2.0
                * params.a[i]
                * math.sqrt(float(np.sum(gz**2)))
                * reach_z
                * math.sqrt(2.0 * ki)
            )
            start += ki
        reach_t = 40.0 * h + twist
        lo[-1] = max(lo[-1], g_flat[-1] - reach_t)
        hi[-1] = min(hi[-1], g_flat[-1] + reach_t)
        if np.any(lo >= hi):
            return None, None
    extents = hi - lo
    base = float(np.min(extents))
    gl_x, gl_w = np.polynomial.legendre.leggauss(grid_points)
    axes, wts1 = [], []
    for d in range(params.dim):
        npan = max(1, int(math.ceil(extents[d] / base - 1e-9)))
        edges = np.linspace(lo[d], hi[d], npan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        axes.append((mid[:, None] + half[:, None] * gl_x).ravel())
        wts1.append((half[:, None] * gl_w).ravel())
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    wt = wts1[0]
    for ww in wts1[1:]:
        wt = np.multiply.outer(wt, ww)
    return nodes, wt.ravel()


def _field_scale(f):
    scale = getattr(f, "scale", None)
    if scale is not None:
        return float(scale)
    lo, hi = f.support_box()
    return 0.5 * float(np.min(np.asarray(hi) - np.asarray(lo)))


def _reduced_grid(params, f, h, g_flat, grid_points):
    """Grid for the dilation-reduced convolution int f(g . dil(sqrt h, v))
    p_1(v) dv: the kernel lives at unit scale and f at scale/sqrt(h), so a
    coarse grid resolves both.  Used when sqrt(h) is small against f's
    scale; the box is the kernel's unit-time reach cut down to f's
    preimage.  Returns (dilated nodes W, p_1-weighted quadrature weights).
    """
    n = params.n
    r = math.sqrt(h)
    B_z, B_t = 9.0, 30.0
    lo, hi = f.support_box()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    lo_v = np.empty(params.dim)
    hi_v = np.empty(params.dim)
    lo_v[: 2 * n] = np.maximum(-B_z, (lo[: 2 * n] - g_flat[: 2 * n]) / r)
    hi_v[: 2 * n] = np.minimum(B_z, (hi[: 2 * n] - g_flat[: 2 * n]) / r)
    twist = 0.0
    start = 0
    for i, ki in enumerate(params.k):
        gz = g_flat[2 * start : 2 * (start + ki)]
        twist += 2.0 * params.a[i] * math.sqrt(float(np.sum(gz**2))) * B_z * math.sqrt(2.0 * ki)
        start += ki
    lo_v[-1] = max(-B_t, (lo[-1] - g_flat[-1] - r * twist) / h)
    hi_v[-1] = min(B_t, (hi[-1] - g_flat[-1] + r * twist) / h)
    if np.any(lo_v >= hi_v):
        return None, None
    fscale = _field_scale(f)
    axes, wts1 = [], []
    for d in range(params.dim):
        kernel_width = 1.5 if d < 2 * n else 5.0
        f_width = fscale / r if d < 2 * n else max(fscale / h, 1.0)
        width = min(kernel_width, f_width)
        npan = max(1, int(math.ceil((hi_v[d] - lo_v[d]) / width)))
        # single-panel axes get the full order; multi-panel axes share it
        order = grid_points if npan == 1 else 10
        gl_x, gl_w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(lo_v[d], hi_v[d], npan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        axes.append((mid[:, None] + half[:, None] * gl_x).ravel())
        wts1.append((half[:, None] * gl_w).ravel())
    # the kernel factorizes over (z block norms) x (center coordinate), so
    # its values come from one product-grid evaluation
    zmesh = np.meshgrid(*axes[:-1], indexing="ij")
    zpart = np.stack([m.ravel() for m in zmesh], axis=-1)  # (m1, 2n)
    pair_sq = zpart[:, 0::2] ** 2 + zpart[:, 1::2] ** 2
    zsq = np.stack(
        [pair_sq[:, sl].sum(axis=-1) for sl in params.block_slices()], axis=-1
    )
    pvals, _ = kernel_product_grid(params, 1.0, zsq, axes[-1])  # (m1, m2)
    wz = wts1[0]
    for ww in wts1[1:-1]:
        wz = np.multiply.outer(wz, ww)
    weights = (pvals * wz.ravel()[:, None] * wts1[-1]).ravel()
    m1, m2 = zsq.shape[0], axes[-1].size
    W = np.empty((m1 * m2, params.dim))
    W[:, : 2 * n] = np.repeat(zpart, m2, axis=0) * r
    W[:, 2 * n] = np.tile(axes[-1], m1) * h
    return W, weights


def semigroup_estimate(params, f, h, g_flat, method="mc", dspec=None, qspec=None, grid_points=16):
    """(value, se) of e^{h Delta} f at g.  se is None for quadrature.

    The quadrature route integrates f(w) p_h(g^{-1} w) over f's own
    support box (left translation preserves the measure) when the kernel
    is at least as wide as f, and switches to the dilation-reduced form
    int f(g . dil(sqrt h, v)) p_1(v) dv when the kernel is the narrow
    factor.
    """
    g_flat = np.asarray(g_flat, dtype=float)
    if method == "mc":
        W = sample_heat_points(params, h, dspec)
        vals = f.value(multiply_flat(params, g_flat, W))
        return float(np.mean(vals)), float(np.std(vals) / math.sqrt(vals.size))
    if method != "quadrature":
        raise ValueError("method must be 'mc' or 'quadrature'")
    if 2.0 * math.sqrt(h) < _field_scale(f):
        W, wts = _reduced_grid(params, f, h, g_flat, grid_points)
        if W is None:
            return 0.0, None
        vals = f.value(multiply_flat(params, g_flat, W))
        return float(np.sum(vals * wts)), None
    nodes, wt = _support_grid(params, f, grid_points, h, g_flat)
    if nodes is None:
        return 0.0, None
    shifted = multiply_flat(params, -g_flat, nodes)  # g^{-1} . w
    pvals, _ = kernel_points(params, h, shifted, qspec)
    return float(np.sum(f.value(nodes) * pvals * wt)), None


def semigroup_apply(params, f, h, g_flat, method="mc", dspec=None, qspec=None, grid_points=16) -> float:
    """e^{h Delta} f (g) by the requested route."""
    return semigroup_estimate(params, f, h, g_flat, method, dspec, qspec, grid_points)[0]


def _chain_rule_components(params, f, g_flat, W, wts, which="left"):
    """Weighted means of the frame applied to g -> f(g . w), all 2n at once.

    Left frame coefficients at g use (y(g) - Im w, Re w - x(g)); the right
    frame collapses to the right frame of f at g . w.
    """
    n = params.n
    a = params.pair_a
    pts = multiply_flat(params, g_flat, W)
    grad = f.gradient(pts)
    gt = grad[..., 2 * n]
    wx, wy = W[..., 0 : 2 * n : 2], W[..., 1 : 2 * n : 2]
    gx, gy = g_flat[0 : 2 * n : 2], g_flat[1 : 2 * n : 2]
    if which == "left":
        cx = grad[..., 0 : 2 * n : 2] + 2.0 * a * (gy - wy) * gt[..., None]
        cy = grad[..., 1 : 2 * n : 2] + 2.0 * a * (wx - gx) * gt[..., None]
    else:
        cx = grad[..., 0 : 2 * n : 2] - 2.0 * a * (gy + wy) * gt[..., None]
        cy = grad[..., 1 : 2 * n : 2] + 2.0 * a * (gx + wx) * gt[..., None]
    comps = np.empty(W.shape[:-1] + (2 * n,))
    comps[..., 0::2] = cx
    comps[..., 1::2] = cy
    mean = np.sum(comps * wts[..., None], axis=0)
    se = np.std(comps, axis=0) / math.sqrt(W.shape[0])
    return mean, se


def grad_semigroup_components(params, f, h, g_flat, method="mc", dspec=None, qspec=None, grid_points=16):
    """Components of the horizontal gradient of e^{h Delta} f at g.

    mc differentiates under the convolution with the chain rule on
    g -> f(g . w); quadrature uses the identity
    X^{(g)} p_h(g^{-1} w) = -(X-hat p_h)(g^{-1} w) so the kernel's
    analytic partials carry the derivative.
    """
    g_flat = np.asarray(g_flat, dtype=float)
    if method == "mc":
        W = sample_heat_points(params, h, dspec)
        wts = np.full(W.shape[0], 1.0 / W.shape[0])
        mean, se = _chain_rule_components(params, f, g_flat, W, wts, "left")
        return mean, se
    if method != "quadrature":
        raise ValueError("method must be 'mc' or 'quadrature'")
    if 2.0 * math.sqrt(h) < _field_scale(f):
        W, wts = _reduced_grid(params, f, h, g_flat, grid_points)
        if W is None:
            return np.zeros(2 * params.n), None
        mean, _ = _chain_rule_components(params, f, g_flat, W, wts, "left")
        return mean, None
    nodes, wt = _support_grid(params, f, grid_points, h, g_flat)
    if nodes is None:
        return np.zeros(2 * params.n), None
    shifted = multiply_flat(params, -g_flat, nodes)
    der = kernel_derivatives(params, h, shifted, qspec)
    hat = horizontal_components(params, der["dp"], shifted, "right")
    mean = -np.sum((f.value(nodes) * wt)[:, None] * hat, axis=0)
    return mean, None


def grad_semigroup(params, f, h, g_flat, method="mc", dspec=None, qspec=None, grid_points=16) -> float:
    comps, _ = grad_semigroup_components(params, f, h, g_flat, method, dspec, qspec, grid_points)
    return float(np.sqrt(np.sum(comps**2)))


# ---------------------------------------------------------------------------
# Ball averages
# ---------------------------------------------------------------------------

def ball_mean(params: GroupParams, f, method="mc", count=200000, seed=7, grid_points=24):
    """Average of f over the unit ball {d < 1}.

    mc: rejection sampling in the bounding box; grid: midpoint tensor grid
    with the d < 1 indicator (the cell volume cancels in the mean).
    Returns (mean, se); se is None for the grid route.
    """
    z_half, t_half = ball_bounding_box(params)
    if method == "mc":
        rng = philox(seed, 101)
        pts = np.empty((count, params.dim))
        pts[:, : 2 * params.n] = rng.uniform(-z_half, z_half, size=(count, 2 * params.n))
        pts[:, -1] = rng.uniform(-t_half, t_half, size=count)
    elif method == "grid":
        axes = []
        for d in range(params.dim):
            half = z_half if d < 2 * params.n else t_half
            edges = np.linspace(-half, half, grid_points + 1)
            axes.append(0.5 * (edges[1:] + edges[:-1]))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
    else:
        raise ValueError("method must be 'mc' or 'grid'")
    zsq = block_norms_sq_flat(params, pts)
    inside = distance_squared_arrays(params, zsq, pts[:, -1]) < 1.0
    kept = pts[inside]
    vals = f.value(kept)
    mean = float(np.mean(vals))
    if method == "mc":
        return mean, float(np.std(vals) / math.sqrt(vals.size))
    return mean, None


# ---------------------------------------------------------------------------
# Inequality checks
# ---------------------------------------------------------------------------

def check_li_inequality(params, family, points, h_values, dspec, frozen=None) -> VerificationReport:
    """Empirical constant sup |grad e^{h D} f(g)| / e^{h D}(|grad f|)(g).

    Denominators below ten Monte Carlo standard errors are excluded so the
    sup never divides noise by noise.
    """
    n = params.n
    a = params.pair_a
    best = 0.0
    best_case = None
    ratios = []
    excluded = 0
    for hi, h in enumerate(h_values):
        W = sample_heat_points(params, h, dspec.with_stream(hi + 1))
        wx, wy = W[:, 0 : 2 * n : 2], W[:, 1 : 2 * n : 2]
        for gi, g_flat in enumerate(points):
            g_flat = np.asarray(g_flat, dtype=float)
            pts = multiply_flat(params, g_flat, W)
            gx, gy = g_flat[0 : 2 * n : 2], g_flat[1 : 2 * n : 2]
            for fi, f in enumerate(family):
                grad = f.gradient(pts)
                gt = grad[:, 2 * n]
                cx = grad[:, 0 : 2 * n : 2] + 2.0 * a * (gy - wy) * gt[:, None]
                cy = grad[:, 1 : 2 * n : 2] + 2.0 * a * (wx - gx) * gt[:, None]
                num = math.sqrt(
                    float(np.sum(np.mean(cx, axis=0) ** 2) + np.sum(np.mean(cy, axis=0) ** 2))
                )
                hcomp = horizontal_components(params, grad, pts, "left")
                hnorm = np.sqrt(np.sum(hcomp**2, axis=-1))
                den = float(np.mean(hnorm))
                den_se = float(np.std(hnorm) / math.sqrt(hnorm.size))
                if den <= 10.0 * den_se:
                    excluded += 1
                    continue
                ratio = num / den
                ratios.append(ratio)
                if ratio > best:
                    best = ratio
                    best_case = {"f": fi, "g": gi, "h": h}
    if not ratios:
        raise RuntimeError("all cases excluded; nothing to report")
    rep = VerificationReport(
        identifier="gradient-commutation-bound",
        config={
            "group": params.label(),
            "family": len(family),
            "points": len(points),
            "h_values": list(map(float, h_values)),
            "paths": dspec.paths,
            "steps": dspec.steps,
        },
        seed=dspec.seed,
        stats={
            "constant": best,
            "argmax": best_case,
            "ratio_mean": float(np.mean(ratios)),
            "cases": len(ratios),
        },
        constant=best,
        exclusions=excluded,
    )
    rep.require(np.isfinite(best), "empirical constant must be finite")
    if frozen:
        rep.frozen = dict(frozen)
        from .reports import within_band

        rep.require(
            within_band(best, frozen["constant"]),
            "empirical constant left the frozen 20 percent band",
        )
    return rep


def check_commutation(params, f, h, g_flat, dspec, qspec=None, method="mc") -> VerificationReport:
    """Right-frame commutation with the semigroup, both frames evaluated.

    Left side: the right frame applied to g -> e^{h D} f(g) by central
    finite differences along the frame flows (left translations).  Right
    side: the semigroup applied to the right frame of f.
    """
    g_flat = np.asarray(g_flat, dtype=float)
    eps = 1e-4
    kw = dict(method=method, dspec=dspec, qspec=qspec)
    lhs_all, rhs_all, labels = [], [], []
    for i in range(params.l):
        for j in range(params.k[i]):
            for kind in ("x", "y"):
                pair = sum(params.k[:i]) + j
                step = np.zeros(params.dim)
                step[2 * pair if kind == "x" else 2 * pair + 1] = eps
                # right-frame flow = left translation by the step point
                g_plus = multiply_flat(params, step, g_flat)
                g_minus = multiply_flat(params, -step, g_flat)
                v_plus = semigroup_apply(params, f, h, g_plus, **kw)
                v_minus = semigroup_apply(params, f, h, g_minus, **kw)
                lhs_all.append((v_plus - v_minus) / (2.0 * eps))
                rhs_all.append(
                    semigroup_apply(params, right_field_of(params, (i, j, kind), f), h, g_flat, **kw)
                )
                labels.append(f"{kind}{i}{j}")
    lhs_all = np.asarray(lhs_all)
    rhs_all = np.asarray(rhs_all)
    scale = max(float(np.max(np.abs(rhs_all))), 1e-6)
    errs = np.abs(lhs_all - rhs_all) / scale
    worst = float(np.max(errs))
    rep = VerificationReport(
        identifier="right-frame-commutation",
        config={"group": params.label(), "h": h, "method": method},
        seed=dspec.seed if method == "mc" else None,
        stats={"worst_rel_error": worst, "per_field": dict(zip(labels, errs.tolist()))},
    )
    rep.require(worst <= 1e-3, "commutation mismatch above 1e-3")
    return rep


def check_cheeger(params, family, dspec, ball_count=200000, frozen=None) -> VerificationReport:
    """Weighted L1 oscillation bounds: global, ball-only, and complement.

    global      E|f(W) - m_f| / E|grad f|(W)      (W ~ kernel at h = 1)
    ball        mean_B |f - m_f| / mean_B |grad f|
    complement  E[|f - m_f| 1_{d >= 1}] / E|grad f|(W)
    """
    W = sample_heat_points(params, 1.0, dspec.with_stream(9))
    zsqW = block_norms_sq_flat(params, W)
    outside = distance_squared_arrays(params, zsqW, W[:, -1]) >= 1.0
    z_half, t_half = ball_bounding_box(params)
    rng = philox(dspec.seed, 909)
    box = np.empty((ball_count, params.dim))
    box[:, : 2 * params.n] = rng.uniform(-z_half, z_half, size=(ball_count, 2 * params.n))
    box[:, -1] = rng.uniform(-t_half, t_half, size=ball_count)
    inball = distance_squared_arrays(params, block_norms_sq_flat(params, box), box[:, -1]) < 1.0
    ball_pts = box[inball]

    sups = {"global": 0.0, "ball": 0.0, "complement": 0.0}
    excluded = 0
    for f in family:
        m_f = float(np.mean(f.value(ball_pts)))
        fW = f.value(W)
        gW = hgrad_norm_of(params, f).value(W)
        den = float(np.mean(gW))
        den_se = float(np.std(gW) / math.sqrt(gW.size))
        if den <= 10.0 * den_se:
            excluded += 1
            continue
        sups["global"] = max(sups["global"], float(np.mean(np.abs(fW - m_f))) / den)
        sups["complement"] = max(
            sups["complement"], float(np.mean(np.abs(fW - m_f) * outside)) / den
        )
        fB = f.value(ball_pts)
        gB = hgrad_norm_of(params, f).value(ball_pts)
        denB = float(np.mean(gB))
        if denB > 0:
            sups["ball"] = max(sups["ball"], float(np.mean(np.abs(fB - m_f))) / denB)
    rep = VerificationReport(
        identifier="cheeger-family",
        config={"group": params.label(), "family": len(family), "paths": dspec.paths},
        seed=dspec.seed,
        stats=dict(sups),
        constant=sups["global"],
        exclusions=excluded,
    )
    rep.require(all(np.isfinite(v) for v in sups.values()), "ratios must be finite")
    if frozen:
        rep.frozen = dict(frozen)
        from .reports import within_band

        for key in sups:
            rep.require(
                within_band(sups[key], frozen[key]),
                f"{key} oscillation ratio left the frozen band",
            )
    return rep


def check_log_sobolev_poincare(params, family, points, h_values, dspec, frozen=None) -> VerificationReport:
    """Empirical entropy and variance constants of the semigroup.

    entropy   [E phi^2 log phi^2 - E phi^2 log E phi^2] / (h E |grad f|^2)
    variance  [E phi^2 - (E phi)^2] / (h E |grad f|^2)

    with phi = f + c_f shifted positive (the shift changes neither side's
    gradient term and keeps the entropy well defined).
    """
    sup_ent = 0.0
    sup_var = 0.0
    excluded = 0
    cases = 0
    for hi, h in enumerate(h_values):
        W = sample_heat_points(params, h, dspec.with_stream(50 + hi))
        for g_flat in points:
            pts = multiply_flat(params, np.asarray(g_flat, dtype=float), W)
            for f in family:
                shift = 0.5 + float(np.sum(np.abs(f.coeffs)))
                phi = f.value(pts) + shift
                gsq = hgrad_norm_of(params, f, power=2).value(pts)
                den = float(np.mean(gsq)) * h
                den_se = float(np.std(gsq) / math.sqrt(gsq.size)) * h
                if den <= 10.0 * den_se:
                    excluded += 1
                    continue
                phi2 = phi**2
                m2 = float(np.mean(phi2))
                ent = float(np.mean(phi2 * np.log(phi2))) - m2 * math.log(m2)
                var = m2 - float(np.mean(phi)) ** 2
                sup_ent = max(sup_ent, ent / den)
                sup_var = max(sup_var, var / den)
                cases += 1
    rep = VerificationReport(
        identifier="log-sobolev-poincare",
        config={
            "group": params.label(),
            "family": len(family),
            "points": len(points),
            "h_values": list(map(float, h_values)),
            "paths": dspec.paths,
        },
        seed=dspec.seed,
        stats={"entropy_constant": sup_ent, "variance_constant": sup_var, "cases": cases},
        exclusions=excluded,
    )
    rep.require(np.isfinite(sup_ent) and np.isfinite(sup_var), "constants must be finite")
    if frozen:
        rep.frozen = dict(frozen)
        from .reports import within_band

        rep.require(
            within_band(sup_ent, frozen["entropy_constant"]),
            "entropy constant left the frozen band",
        )
        rep.require(
            within_band(sup_var, frozen["variance_constant"]),
            "variance constant left the frozen band",
        )
    return rep


def check_holder_corollary(params, family, points, h_values, dspec, constant) -> VerificationReport:
    """Exponent-2 consequence: |grad e^{hD} f| <= K (e^{hD} |grad f|^2)^{1/2}.

    Checked sample-wise through the Jensen route: the quadratic mean
    dominates the mean within Monte Carlo error, and the gradient bound
    holds with the supplied empirical constant K.
    """
    n = params.n
    a = params.pair_a
    worst_gap = -np.inf
    worst_chain = -np.inf
    excluded = 0
    for hi, h in enumerate(h_values):
        W = sample_heat_points(params, h, dspec.with_stream(80 + hi))
        wx, wy = W[:, 0 : 2 * n : 2], W[:, 1 : 2 * n : 2]
        for g_flat in points:
            g_flat = np.asarray(g_flat, dtype=float)
            pts = multiply_flat(params, g_flat, W)
            gx, gy = g_flat[0 : 2 * n : 2], g_flat[1 : 2 * n : 2]
            for f in family:
                grad = f.gradient(pts)
                gt = grad[:, 2 * n]
                cx = grad[:, 0 : 2 * n : 2] + 2.0 * a * (gy - wy) * gt[:, None]
                cy = grad[:, 1 : 2 * n : 2] + 2.0 * a * (wx - gx) * gt[:, None]
                num = math.sqrt(
                    float(np.sum(np.mean(cx, axis=0) ** 2) + np.sum(np.mean(cy, axis=0) ** 2))
                )
                hcomp = horizontal_components(params, grad, pts, "left")
                hnorm = np.sqrt(np.sum(hcomp**2, axis=-1))
                mean1 = float(np.mean(hnorm))
                se1 = float(np.std(hnorm) / math.sqrt(hnorm.size))
                hsq = hnorm**2
                mean2 = float(np.mean(hsq))
                se2 = float(np.std(hsq) / math.sqrt(hsq.size))
                if mean1 <= 10.0 * se1:
                    excluded += 1
                    continue
                rms = math.sqrt(mean2)
                rms_se = 0.5 * se2 / max(rms, 1e-300)
                # Jensen: quadratic mean must dominate the mean
                worst_gap = max(worst_gap, (mean1 - rms) / (3.0 * (se1 + rms_se) + 1e-300))
                # chain: num <= K rms within error
                worst_chain = max(
                    worst_chain, (num - constant * rms) / (3.0 * constant * rms_se + 1e-300)
                )
    rep = VerificationReport(
        identifier="holder-consequence-p2",
        config={"group": params.label(), "constant": constant, "paths": dspec.paths},
        seed=dspec.seed,
        stats={"worst_jensen_violation": worst_gap, "worst_chain_violation": worst_chain},
        exclusions=excluded,
    )
    rep.require(worst_gap <= 1.0, "quadratic mean fell below the mean beyond 3 SE")
    rep.require(worst_chain <= 1.0, "gradient bound chain failed beyond 3 SE")
    return rep


def check_translation_dilation_reduction(params, f, h, g_flat, qspec=None, grid_points=14) -> VerificationReport:
    """Reduction of the semigroup to the origin at unit time.

    e^{h D} f(g) must equal e^{D} f_{g,h}(0) with
    f_{g,h}(g') = f(g . dilate(sqrt h, g')), and the gradients must match
    after the 1/sqrt(h) rescaling.  Evaluated by quadrature on both sides.
    """
    g_flat = np.asarray(g_flat, dtype=float)
    qspec = qspec or QuadratureSpec(tol=1e-8)
    lhs = semigroup_apply(params, f, h, g_flat, "quadrature", qspec=qspec, grid_points=grid_points)
    moved = TransformedField(params, f, g_flat, math.sqrt(h))
    origin = np.zeros(params.dim)
    # coarser grid on the reduced side: under matched grids the two tensor
    # sums coincide identically, which would make the check vacuous
    rhs = semigroup_apply(
        params, moved, 1.0, origin, "quadrature", qspec=qspec, grid_points=grid_points + 3
    )
    scale = max(abs(lhs), abs(rhs), 1e-12)
    value_err = abs(lhs - rhs) / scale

    glhs = grad_semigroup(params, f, h, g_flat, "quadrature", qspec=qspec, grid_points=grid_points)
    grhs = grad_semigroup(
        params, moved, 1.0, origin, "quadrature", qspec=qspec, grid_points=grid_points + 3
    )
    gscale = max(glhs, grhs / math.sqrt(h), 1e-12)
    grad_err = abs(glhs - grhs / math.sqrt(h)) / gscale

    rep = VerificationReport(
        identifier="translation-dilation-reduction",
        config={"group": params.label(), "h": h, "grid_points": grid_points},
        stats={"value_rel_error": value_err, "grad_rel_error": grad_err},
    )
    rep.require(value_err <= 1e-3, "semigroup value reduction mismatch")
    rep.require(grad_err <= 1e-3, "semigroup gradient reduction mismatch")
    return rep


def check_integration_by_parts(params, f, qspec=None, grid_points=18) -> VerificationReport:
    """int (V f) p dm = -int f (V p) dm for every horizontal frame field V,
    both left and right invariant, with p the unit-time kernel.

    Both sides are tensor-grid integrals over the support of f; the kernel
    and its partials come from the panel quadrature.
    """
    qspec = qspec or QuadratureSpec(tol=1e-9)
    lo, hi = f.support_box()
    gl_x, gl_w = np.polynomial.legendre.leggauss(grid_points)
    axes, wts1 = [], []
    for d in range(params.dim):
        mid, half = 0.5 * (hi[d] + lo[d]), 0.5 * (hi[d] - lo[d])
        axes.append(mid + half * gl_x)
        wts1.append(half * gl_w)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
    wt = wts1[0]
    for ww in wts1[1:]:
        wt = np.multiply.outer(wt, ww)
    wt = wt.ravel()

    out = kernel_derivatives(params, 1.0, pts, qspec)
    p, dp = out["p"], out["dp"]
    fval = f.value(pts)
    fgrad = f.gradient(pts)
    n = params.n
    worst = 0.0
    details = {}
    for which in ("left", "right"):
        fcomp = horizontal_components(params, fgrad, pts, which)
        pcomp = horizontal_components(params, dp, pts, which)
        lhs = np.sum(fcomp * (p * wt)[:, None], axis=0)
        rhs = -np.sum(pcomp * (fval * wt)[:, None], axis=0)
        scale = max(float(np.max(np.abs(lhs))), 1e-12)
        err = float(np.max(np.abs(lhs - rhs))) / scale
        details[which] = err
        worst = max(worst, err)
    rep = VerificationReport(
        identifier="integration-by-parts",
        config={"group": params.label(), "grid_points": grid_points},
        stats={"worst_rel_error": worst, "per_frame": details},
    )
    rep.require(worst <= 1e-3, "integration by parts mismatch above 1e-3")
    return rep
