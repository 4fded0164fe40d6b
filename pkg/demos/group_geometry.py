"""Tour of the group structure and the distance from the origin.

Walks through the twisted product, dilations, the horizontal frame, and
the closed-form Carnot-Caratheodory distance on a two-block nonisotropic
group, printing small tables along the way.

Run:  python3 demos/group_geometry.py
"""

import math

import numpy as np

from nilheat.distance import (
    boundary_threshold,
    distance_squared,
    epsilon0,
    mu,
    mu_inverse,
    solve_theta,
)
from nilheat.groups import GroupParams, GroupPoint, dilate, inverse, multiply, origin

params = GroupParams(l=2, k=(1, 2), a=(0.5, 1.0))
print(f"group {params.label()}: n = {params.n}, chart dimension {params.dim}")

# the twisted product: the center coordinate picks up a weighted symplectic area
g = GroupPoint((np.array([1 + 0j]), np.array([0 + 1j, 0j])), 0.0)
g2 = GroupPoint((np.array([0 + 1j]), np.array([1 + 0j, 0j])), 0.0)
prod = multiply(params, g, g2)
print("\n(z,0)(z',0) twist:", prod.t, " (weights 2 a_i applied per block)")
print("g g^-1 back at the origin:", np.allclose(multiply(params, g, inverse(g)).flat(), 0))

# dilations scale z linearly and t quadratically
gt = GroupPoint((np.array([0.3 + 0.1j]), np.array([0.2j, 0.1 + 0j])), 0.25)
for r in (0.5, 2.0):
    d = dilate(r, gt)
    print(f"dilate({r}): |z| factor {np.abs(d.z[0][0]) / np.abs(gt.z[0][0]):.1f}, "
          f"t factor {d.t / gt.t:.1f}")

# the monotone map behind the angle equation
print("\nmonotone map: value at pi/2 =", mu(math.pi / 2))
print("inverse map roundtrip error:", abs(mu_inverse(mu(1.2)) - 1.2))

# distance branches: interior angle solve vs the z_l = 0 edge
inner = GroupPoint((np.array([0.8 + 0j]), np.array([0.5 + 0j, 0j])), 0.4)
sol = solve_theta(params, inner)
print(f"\ninterior point: theta = {sol.theta:.6f}, branch = {sol.branch.value}, "
      f"eps0 = {epsilon0(params, inner):.6f}")

edge = GroupPoint((np.array([0.8 + 0j]), np.zeros(2, dtype=complex)), 2.0)
thr = boundary_threshold(params, np.array([0.64, 0.0]))
print(f"top block zero, |t| = 2.0 vs threshold {thr:.4f}: branch =",
      solve_theta(params, edge).branch.value)

# the two pinned slices of the distance
zs = GroupPoint((np.array([0.6 + 0.8j]), np.zeros(2, dtype=complex)), 0.0)
print("\nd(z, 0)  =", math.sqrt(distance_squared(params, zs)), " (equals |z|)")
ta = GroupPoint((np.zeros(1, dtype=complex), np.zeros(2, dtype=complex)), 1.0)
print("d(0, t)^2 =", distance_squared(params, ta), " (equals pi |t|)")

# homogeneity under dilation
base = distance_squared(params, gt)
print("\nhomogeneity d^2(dilate(r, g)) / (r^2 d^2(g)):")
for r in (0.3, 1.7, 4.0):
    print(f"  r = {r}: {distance_squared(params, dilate(r, gt)) / (r * r * base):.12f}")

# a short table along a vertical line: the angle sweeps toward the edge
print("\nangle and distance climbing the vertical direction at fixed z:")
print(f"{'t':>6} {'theta':>10} {'d^2':>10} {'eps0':>8}")
for t in (0.1, 0.5, 1.0, 2.0, 4.0):
    p = GroupPoint((np.array([0.5 + 0j]), np.array([0.4 + 0j, 0j])), t)
    s = solve_theta(params, p)
    print(f"{t:6.2f} {s.theta:10.6f} {distance_squared(params, p):10.6f} "
          f"{epsilon0(params, p):8.5f}")
