"""Projective and Grassmannian distances between tangent spaces."""

import math

import numpy as np

from cpdlab import (
    Rank1Tensor,
    fubini_study_distance,
    grassmann_distance,
    principal_angles,
    projection_distance,
    tangent_basis,
    weighted_distance,
)

rng = np.random.default_rng(7)
a, b, c = rng.standard_normal(4), rng.standard_normal(3), rng.standard_normal(2)

# Fubini-Study: the angle between lines, blind to sign and scale
print(f"d_FS(a, -2a) = {fubini_study_distance(a, -2 * a)}")
x, y = np.array([1.0, 0.0]), np.array([1.0, 1.0])
print(f"d_FS(e1, e1+e2) = {fubini_study_distance(x, y):.6f} (pi/4 = {math.pi / 4:.6f})")

# move the first factor a little and watch the tangent space follow
p = Rank1Tensor([a, b, c])
for eps in (1e-1, 1e-3, 1e-6):
    q = Rank1Tensor([a + eps * rng.standard_normal(4), b, c])
    u, v = tangent_basis(p), tangent_basis(q)
    theta = principal_angles(u, v).angles
    print(f"eps={eps:.0e}: largest angle {theta[-1]:.3e}, "
          f"dist_P {projection_distance(u, v):.3e} <= dist_R {grassmann_distance(u, v):.3e}, "
          f"dist_w {weighted_distance(p, q):.3e}")
