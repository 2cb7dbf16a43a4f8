"""
From far-field data to size estimates
=====================================

Recover the scattering matrix from a response matrix and known centers,
extract the capacitance of every obstacle and turn its eigenvalues into
bounds on the surface area and radii.
"""

import numpy as np

from elastoscatter import Scatterer, Scene, direction_set, make_medium, make_shape, radii
from elastoscatter.acquisition import add_noise, response_matrix
from elastoscatter.sizing import (Constants, convex_bounds, extract_capacitances, recover_B,
                                  size_interval)

medium = make_medium(2.0, 1.0, 2 * np.pi)
eps = 0.05
sphere = make_shape("sphere", 1.0, 2)
centers = [(0.13, -0.21, 0.07), (0.71, 0.32, -0.18), (-0.42, 0.55, 0.38)]
scene = Scene.build(medium, [Scatterer(sphere, eps, z) for z in centers])

F = response_matrix(scene, "ShSh", direction_set(30))
caps = extract_capacitances(recover_B(F, scene.centers)).capacitances
err = max(np.linalg.norm(c.matrix - r.matrix) / np.linalg.norm(r.matrix)
          for c, r in zip(caps, scene.capacitances))
print(f"noiseless round trip: max relative error {err:.1e}")

noisy = add_noise(F, 0.01, seed=3)
caps_noisy = extract_capacitances(recover_B(noisy, scene.centers)).capacitances
err = max(np.linalg.norm(c.matrix - r.matrix) / np.linalg.norm(r.matrix)
          for c, r in zip(caps_noisy, scene.capacitances))
print(f"1% noise round trip:  max relative error {err:.1e}")

# The theorems only guarantee that suitable constants exist; calibrate them
# on a sphere, a cube and a 2:1 ellipsoid.
const = Constants.calibrated(medium)
print("\ncalibrated constants: perimeter", np.round(const.perimeter, 3),
      "convex", np.round(const.convex, 3))

area = sphere.area * eps  # |boundary of D| / eps
ri, re = eps * np.array(radii(sphere))  # radii of the polyhedral sphere
for m, C in enumerate(caps):
    iv = size_interval(C, medium, *const.perimeter)
    ri_up, re_low = convex_bounds(C, medium, *const.convex)
    print(f"scatterer {m + 1}: |dD|/eps in [{iv.lower:.4f}, {iv.upper:.4f}] "
          f"(true {area:.4f})")
    print(f"             R_i <= {ri_up:.4f} (true {ri:.4f}), R_e >= {re_low:.4f} (true {re:.4f})")
