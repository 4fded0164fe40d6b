"""Compactly supported test functions with closed-form derivatives.

The built-in family multiplies a polynomial of total degree <= 4 in the
centered, scaled coordinates by a C^2 bump.  Two bump profiles are
available:

  poly     B(q) = (1 - q)^3 on q = s^2 < 1, zero outside.
  plateau  identically 1 for s <= 1/2, quintic smoothstep down to 0 at
           s = 1 (used where a function must be exactly 1 on a region,
           e.g. mass-conservation checks).

Both profiles have two continuous derivatives across the support edge, so
value, gradient, and Hessian all vanish outside the reported bounding box.
Evaluators are vectorized over a trailing coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TestFunction", "standard_family", "linear_bump", "indicator_like"]


def _poly_derivative(exps, coeffs, d):
    """Term-list derivative of sum_k coeffs[k] * prod xi^exps[k] wrt xi_d."""
    keep = exps[:, d] > 0
    if not np.any(keep):
        return np.zeros((0, exps.shape[1]), dtype=int), np.zeros(0)
    new_exps = exps[keep].copy()
    new_coeffs = coeffs[keep] * new_exps[:, d]
    new_exps[:, d] -= 1
    return new_exps, new_coeffs


def _poly_eval(exps, coeffs, xi):
    if exps.shape[0] == 0:
        return np.zeros(xi.shape[:-1])
    out = np.zeros(xi.shape[:-1])
    for e, c in zip(exps, coeffs):
        term = np.full(xi.shape[:-1], c)
        for d, ed in enumerate(e):
            if ed:
                term = term * xi[..., d] ** ed
        out += term
    return out


@dataclass
class TestFunction:
    """Polynomial-times-bump function on R^{2n+1}.

    center and scale fix the support ball {|coords - center| < scale}; the
    polynomial is evaluated in xi = (coords - center)/scale.
    """

    center: np.ndarray
    scale: float
    exps: np.ndarray
    coeffs: np.ndarray
    bump: str = "poly"

    __test__ = False  # not a pytest collectible despite the name

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.exps = np.asarray(self.exps, dtype=int)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.bump not in ("poly", "plateau"):
            raise ValueError("unknown bump profile")
        dim = self.center.size
        if self.exps.ndim != 2 or self.exps.shape[1] != dim:
            raise ValueError("exponent table shape must be (terms, dim)")
        # Precompute derivative term lists once; evaluation reuses them.
        self._d1 = [_poly_derivative(self.exps, self.coeffs, d) for d in range(dim)]
        self._d2 = [
            [_poly_derivative(*self._d1[d1], d2) for d2 in range(dim)]
            for d1 in range(dim)
        ]

    @property
    def dim(self) -> int:
        return self.center.size

    def support_box(self):
        """(lo, hi) corners of a box containing the support."""
        return self.center - self.scale, self.center + self.scale

    # Bump profile in q = s^2 and its first two q-derivatives.
    def _bump_q(self, q):
        if self.bump == "poly":
            w = np.clip(1.0 - q, 0.0, None)
            return w**3, -3.0 * w**2, 6.0 * w
        # plateau: 1 on s <= 1/2; smoothstep in w = (s - 1/2)/(1/2) beyond.
        s = np.sqrt(np.clip(q, 0.0, None))
        w = np.clip((s - 0.5) * 2.0, 0.0, 1.0)
        b = 1.0 - w**3 * (10.0 - 15.0 * w + 6.0 * w**2)
        dbdw = -30.0 * w**2 * (1.0 - w) ** 2
        d2bdw2 = -60.0 * w * (1.0 - 3.0 * w + 2.0 * w**2)
        # chain rule to q: dw/dq = 1/s, d2w/dq2 = -1/(2 s^3); w ramp only.
        active = (s > 0.5) & (s < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            dwdq = np.where(active, 1.0 / s, 0.0)
            d2wdq2 = np.where(active, -0.5 / s**3, 0.0)
        dq = dbdw * dwdq
        d2q = d2bdw2 * dwdq**2 + dbdw * d2wdq2
        return b, dq, d2q

    def value(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        xi = (coords - self.center) / self.scale
        q = np.sum(xi**2, axis=-1)
        b, _, _ = self._bump_q(q)
        out = _poly_eval(self.exps, self.coeffs, xi) * b
        return np.where(q < 1.0, out, 0.0)

    def gradient(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        xi = (coords - self.center) / self.scale
        q = np.sum(xi**2, axis=-1)
        b, bq, _ = self._bump_q(q)
        p = _poly_eval(self.exps, self.coeffs, xi)
        out = np.empty(xi.shape)
        for d in range(self.dim):
            pd = _poly_eval(*self._d1[d], xi)
            out[..., d] = (pd * b + p * bq * 2.0 * xi[..., d]) / self.scale
        return np.where(q[..., None] < 1.0, out, 0.0)

    def hessian(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        xi = (coords - self.center) / self.scale
        q = np.sum(xi**2, axis=-1)
        b, bq, bqq = self._bump_q(q)
        p = _poly_eval(self.exps, self.coeffs, xi)
        pd = [_poly_eval(*self._d1[d], xi) for d in range(self.dim)]
        out = np.empty(xi.shape[:-1] + (self.dim, self.dim))
        for d1 in range(self.dim):
            for d2 in range(d1, self.dim):
                pdd = _poly_eval(*self._d2[d1][d2], xi)
                h = (
                    pdd * b
                    + pd[d1] * bq * 2.0 * xi[..., d2]
                    + pd[d2] * bq * 2.0 * xi[..., d1]
                    + p * (bqq * 4.0 * xi[..., d1] * xi[..., d2])
                )
                if d1 == d2:
                    h = h + p * bq * 2.0
                out[..., d1, d2] = h / self.scale**2
                out[..., d2, d1] = out[..., d1, d2]
        return np.where(q[..., None, None] < 1.0, out, 0.0)


def linear_bump(center, scale, direction, bump="poly") -> TestFunction:
    """Bump times the linear form <direction, coords - center>."""
    center = np.asarray(center, dtype=float)
    direction = np.asarray(direction, dtype=float)
    dim = center.size
    exps = np.eye(dim, dtype=int)
    # the polynomial lives in xi = (coords - center)/scale
    return TestFunction(center, scale, exps, direction * scale, bump=bump)


def indicator_like(dim: int, radius: float) -> TestFunction:
    """Plateau bump equal to 1 within radius/2 of the origin."""
    return TestFunction(
        np.zeros(dim), radius, np.zeros((1, dim), dtype=int), np.ones(1), bump="plateau"
    )


FAMILY_SEED = 20240817


def standard_family(params, count=32, seed=FAMILY_SEED):
    """The frozen sweep family: `count` bump-times-polynomial functions.

    Centers alternate between the unit-ball region and points outside it,
    scales cycle through 0.25-4, polynomial degrees cycle 0-4.  Fully
    determined by the seed, so sweeps are reproducible.
    """
    dim = params.dim
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    scales = [0.25, 0.5, 1.0, 2.0, 4.0]
    funcs = []
    for idx in range(count):
        scale = scales[idx % len(scales)]
        degree = idx % 5
        if idx % 2 == 0:
            center = rng.uniform(-0.3, 0.3, size=dim)
        else:
            center = rng.uniform(-2.0, 2.0, size=dim)
            center[0] += 1.5 * np.sign(center[0]) if center[0] != 0 else 1.5
        exps_list = [tuple([0] * dim)]
        for _ in range(2 * degree):
            e = [0] * dim
            total = rng.integers(0, degree + 1)
            for _ in range(int(total)):
                e[int(rng.integers(0, dim))] += 1
            exps_list.append(tuple(e))
        exps_arr = np.array(sorted(set(exps_list)), dtype=int)
        coeffs = rng.uniform(-1.0, 1.0, size=exps_arr.shape[0])
        coeffs[0] += 1.0  # keep a constant component so f is not tiny
        funcs.append(TestFunction(center, scale, exps_arr, coeffs))
    return funcs
