"""Nonisotropic Heisenberg groups: parameters, points, group law, vector fields.

The group H(K, A) is the product of complex blocks C^{k_1} x ... x C^{k_l}
with a real center coordinate t.  Multiplication twists t by a weighted
symplectic form,

    (z, t) (z', t') = (z + z', t + t' + 2 sum_i a_i Im<z_i, z_i'>),

where the complex inner product conjugates its *second* argument,
<w, w'> = sum_k w_k conj(w'_k).  With that convention the left-invariant
horizontal frame is

    X_{i,j} = d/dx_{i,j} + 2 a_i y_{i,j} d/dt,
    Y_{i,j} = d/dy_{i,j} - 2 a_i x_{i,j} d/dt,

and the right-invariant frame flips the sign of the t-coefficients.  The
opposite conjugation convention would flip the sign of the twist and break
these field formulas, which is why the convention is fixed here once and
used everywhere.

Points are plain value records; every operation is a pure function of
(params, point).  Heavy code paths work on flat coordinate arrays with
layout [x_{1,1}, y_{1,1}, ..., x_{l,k_l}, y_{l,k_l}, t] (trailing axis of
length 2n+1), which is also the serialization order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupParams",
    "GroupPoint",
    "origin",
    "multiply",
    "inverse",
    "dilate",
    "multiply_flat",
    "inverse_flat",
    "dilate_flat",
    "left_translate_flat",
    "block_norms_sq",
    "block_norms_sq_flat",
    "horizontal_components",
    "apply_left_field",
    "apply_right_field",
    "horizontal_gradient_norm",
    "sub_laplacian",
]


@dataclass(frozen=True)
class GroupParams:
    """Group data (l, K, A) with the derived total block dimension n.

    Constraints: l >= 1, all k_i >= 1, and 0 < a_1 < ... < a_l = 1 strictly.
    """

    l: int
    k: tuple
    a: tuple
    n: int = field(init=False)

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)
        if self.l < 1:
            raise ValueError("need at least one block (l >= 1)")
        if len(k) != self.l or len(a) != self.l:
            raise ValueError("k and a must both have length l")
        if any(ki < 1 for ki in k):
            raise ValueError("all block sizes k_i must be >= 1")
        if a[-1] != 1.0:
            raise ValueError("the top coefficient a_l must equal 1")
        if any(a[i] <= 0.0 for i in range(self.l)):
            raise ValueError("coefficients a_i must be positive")
        if any(a[i] >= a[i + 1] for i in range(self.l - 1)):
            raise ValueError("coefficients must increase strictly: a_1 < ... < a_l")
        object.__setattr__(self, "n", sum(k))

    @property
    def dim(self) -> int:
        """Real dimension of the coordinate chart, 2n + 1."""
        return 2 * self.n + 1

    @property
    def pair_a(self) -> np.ndarray:
        """Coefficient a_i repeated k_i times, one entry per (x,y) pair."""
        return np.repeat(np.asarray(self.a), np.asarray(self.k))

    @property
    def pair_block(self) -> np.ndarray:
        """Block index (0-based) of each (x,y) pair."""
        return np.repeat(np.arange(self.l), np.asarray(self.k))

    def block_slices(self):
        """Pair-index slices, one per block."""
        out = []
        start = 0
        for ki in self.k:
            out.append(slice(start, start + ki))
            start += ki
        return out

    def label(self) -> str:
        ks = "-".join(str(v) for v in self.k)
        as_ = "-".join(repr(float(v)) for v in self.a)
        return f"l{self.l}_k{ks}_a{as_}"


@dataclass(frozen=True)
class GroupPoint:
    """An element (z, t): z as a tuple of complex block vectors, t real."""

    z: tuple
    t: float

    def __post_init__(self):
        z = tuple(np.asarray(b, dtype=complex) for b in self.z)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    def flat(self) -> np.ndarray:
        """Serialize to [x_{1,1}, y_{1,1}, ..., x_{l,k_l}, y_{l,k_l}, t]."""
        parts = []
        for b in self.z:
            xy = np.empty(2 * b.size)
            xy[0::2] = b.real
            xy[1::2] = b.imag
            parts.append(xy)
        parts.append(np.array([self.t]))
        return np.concatenate(parts)

    @staticmethod
    def from_flat(params: GroupParams, coords) -> "GroupPoint":
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (params.dim,):
            raise ValueError(f"expected {params.dim} coordinates, got {coords.shape}")
        blocks = []
        off = 0
        for ki in params.k:
            seg = coords[off : off + 2 * ki]
            blocks.append(seg[0::2] + 1j * seg[1::2])
            off += 2 * ki
        return GroupPoint(tuple(blocks), coords[-1])


def origin(params: GroupParams) -> GroupPoint:
    return GroupPoint(tuple(np.zeros(ki, dtype=complex) for ki in params.k), 0.0)


def _check_conformal(params: GroupParams, g: GroupPoint):
    if len(g.z) != params.l or any(b.shape != (ki,) for b, ki in zip(g.z, params.k)):
        raise ValueError("point block shapes do not match the group parameters")


def block_norms_sq(g: GroupPoint) -> np.ndarray:
    """|z_i|^2 per block, recomputed from the coordinates."""
    return np.array([float(np.sum(b.real**2 + b.imag**2)) for b in g.z])


def block_norms_sq_flat(params: GroupParams, coords) -> np.ndarray:
    """|z_i|^2 per block for flat coordinate arrays, shape (..., l)."""
    coords = np.asarray(coords, dtype=float)
    n = params.n
    sq = coords[..., : 2 * n] ** 2
    pair_sq = sq[..., 0::2] + sq[..., 1::2]
    out = np.empty(coords.shape[:-1] + (params.l,))
    for i, sl in enumerate(params.block_slices()):
        out[..., i] = pair_sq[..., sl].sum(axis=-1)
    return out


def multiply(params: GroupParams, g: GroupPoint, g2: GroupPoint) -> GroupPoint:
    """Group product (z,t)(z',t') = (z+z', t+t' + 2 sum a_i Im<z_i, z_i'>)."""
    _check_conformal(params, g)
    _check_conformal(params, g2)
    z = tuple(b1 + b2 for b1, b2 in zip(g.z, g2.z))
    twist = 0.0
    for ai, b1, b2 in zip(params.a, g.z, g2.z):
        twist += 2.0 * ai * float(np.sum(b1.imag * b2.real - b1.real * b2.imag))
    return GroupPoint(z, g.t + g2.t + twist)


def inverse(g: GroupPoint) -> GroupPoint:
    return GroupPoint(tuple(-b for b in g.z), -g.t)


def dilate(r: float, g: GroupPoint) -> GroupPoint:
    """Anisotropic dilation (z, t) -> (r z, r^2 t), r > 0."""
    if r <= 0.0:
        raise ValueError("dilation factor must be positive")
    return GroupPoint(tuple(r * b for b in g.z), r * r * g.t)


# ---------------------------------------------------------------------------
# Flat-array variants.  These broadcast over leading axes and are the heavy
# work horses for Monte Carlo sweeps.
# ---------------------------------------------------------------------------

def multiply_flat(params: GroupParams, A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = params.n
    xa, ya = A[..., 0 : 2 * n : 2], A[..., 1 : 2 * n : 2]
    xb, yb = B[..., 0 : 2 * n : 2], B[..., 1 : 2 * n : 2]
    twist = 2.0 * np.sum(params.pair_a * (ya * xb - xa * yb), axis=-1)
    out = np.empty(np.broadcast_shapes(A.shape, B.shape))
    out[..., : 2 * n] = A[..., : 2 * n] + B[..., : 2 * n]
    out[..., 2 * n] = A[..., 2 * n] + B[..., 2 * n] + twist
    return out


def inverse_flat(coords) -> np.ndarray:
    return -np.asarray(coords, dtype=float)


def dilate_flat(params: GroupParams, r: float, coords) -> np.ndarray:
    if r <= 0.0:
        raise ValueError("dilation factor must be positive")
    coords = np.asarray(coords, dtype=float)
    out = coords * r
    out[..., 2 * params.n] = coords[..., 2 * params.n] * r * r
    return out


def left_translate_flat(params: GroupParams, g0_flat, coords) -> np.ndarray:
    """g0 . coords for a single g0 against a batch of points."""
    return multiply_flat(params, np.asarray(g0_flat, dtype=float), coords)


# ---------------------------------------------------------------------------
# Horizontal frame.
# ---------------------------------------------------------------------------

def _field_coefficient(params: GroupParams, which, coords, right: bool):
    """t-coefficient of the requested field at the given flat points."""
    i, j, kind = which
    if not (0 <= i < params.l) or not (0 <= j < params.k[i]):
        raise ValueError(f"no field with block index ({i},{j})")
    if kind not in ("x", "y"):
        raise ValueError("field kind must be 'x' or 'y'")
    pair = sum(params.k[:i]) + j
    ai = params.a[i]
    x = coords[..., 2 * pair]
    y = coords[..., 2 * pair + 1]
    sgn = -1.0 if right else 1.0
    if kind == "x":
        coef = sgn * 2.0 * ai * y
    else:
        coef = -sgn * 2.0 * ai * x
    return pair, coef


def apply_left_field(params: GroupParams, which, f, g: GroupPoint) -> float:
    """Exact directional derivative along X_{i,j} or Y_{i,j} at g.

    `which` is (block, index, 'x'|'y'), 0-based.  Needs f.gradient.
    """
    coords = g.flat()
    pair, coef = _field_coefficient(params, which, coords, right=False)
    grad = f.gradient(coords)
    col = 2 * pair if which[2] == "x" else 2 * pair + 1
    return float(grad[col] + coef * grad[2 * params.n])


def apply_right_field(params: GroupParams, which, f, g: GroupPoint) -> float:
    """Directional derivative along the right-invariant frame at g."""
    coords = g.flat()
    pair, coef = _field_coefficient(params, which, coords, right=True)
    grad = f.gradient(coords)
    col = 2 * pair if which[2] == "x" else 2 * pair + 1
    return float(grad[col] + coef * grad[2 * params.n])


def horizontal_components(params: GroupParams, euclid_grad, coords, which="left"):
    """Combine Euclidean partials into the 2n horizontal field values.

    euclid_grad and coords broadcast with trailing axis dim; returns an array
    with trailing axis 2n ordered (X_{1,1}, Y_{1,1}, ..., X_{l,k_l}, Y_{l,k_l}).
    """
    euclid_grad = np.asarray(euclid_grad, dtype=float)
    coords = np.asarray(coords, dtype=float)
    n = params.n
    a = params.pair_a
    sgn = 1.0 if which == "left" else -1.0
    gt = euclid_grad[..., 2 * n]
    x = coords[..., 0 : 2 * n : 2]
    y = coords[..., 1 : 2 * n : 2]
    out = np.empty(np.broadcast_shapes(euclid_grad.shape, coords.shape)[:-1] + (2 * n,))
    out[..., 0::2] = euclid_grad[..., 0 : 2 * n : 2] + sgn * 2.0 * a * y * gt[..., None]
    out[..., 1::2] = euclid_grad[..., 1 : 2 * n : 2] - sgn * 2.0 * a * x * gt[..., None]
    return out


def horizontal_gradient_norm(params: GroupParams, f, g: GroupPoint, which="left") -> float:
    """Euclidean norm of the 2n horizontal derivatives of f at g."""
    if which not in ("left", "right"):
        raise ValueError("which must be 'left' or 'right'")
    coords = g.flat()
    comps = horizontal_components(params, f.gradient(coords), coords, which)
    return float(np.sqrt(np.sum(comps**2)))


def sub_laplacian(params: GroupParams, f, g: GroupPoint) -> float:
    """Sum of squares of the left-invariant frame applied to f at g.

    Expanding (X^2 + Y^2) through the chain rule gives, per pair,
    f_xx + f_yy + 4a (y f_xt - x f_yt) + 4a^2 (x^2 + y^2) f_tt.
    Needs f.hessian.
    """
    if getattr(f, "hessian", None) is None:
        raise ValueError("sub_laplacian needs a Hessian evaluator")
    coords = g.flat()
    H = f.hessian(coords)
    n = params.n
    a = params.pair_a
    x = coords[0 : 2 * n : 2]
    y = coords[1 : 2 * n : 2]
    ix = np.arange(0, 2 * n, 2)
    iy = ix + 1
    total = float(np.sum(H[ix, ix] + H[iy, iy]))
    total += float(np.sum(4.0 * a * (y * H[ix, 2 * n] - x * H[iy, 2 * n])))
    total += float(np.sum(4.0 * a**2 * (x**2 + y**2)) * H[2 * n, 2 * n])
    return total
