"""
Locating scatterers with MUSIC
==============================

Synthesize a noiseless P-to-P response matrix for three point-like
scatterers, look at its singular values and image the centers.
"""

import numpy as np

from elastoscatter import (ImagingGrid, Scene, add_noise, direction_set, locate, make_medium,
                           pseudospectrum, response_matrix)
from elastoscatter.music import localization_error

medium = make_medium(2.0, 1.0, 2 * np.pi)
rng = np.random.default_rng(0)
caps = []
for _ in range(3):
    A = rng.standard_normal((3, 3))
    caps.append(0.05 * (A @ A.T + 3 * np.eye(3)))
truth = np.array([[0.13, -0.21, 0.07], [0.71, 0.32, -0.18], [-0.42, 0.55, 0.38]])
scene = Scene.point_scatterers(medium, truth, caps)

dirs = direction_set(30)
F = response_matrix(scene, "PP", dirs)

# Rank 3M = 9: the tenth singular value drops to round-off.
s = np.linalg.svd(F.F, compute_uv=False)
print("singular values / s_1:", np.array2string(s[:12] / s[0], precision=2))

h = 0.05 * medium.wavelength_s
grid = ImagingGrid.from_spacing((-0.6, -0.4, -0.3), (0.9, 0.7, 0.5), h)
ps = pseudospectrum(F, grid)
found = locate(ps, expected_M=3)
print("\nnoiseless peaks:\n", np.round(found, 3))
print("errors / h:", np.round(localization_error(found, truth) / h, 2))

# With 1% noise the signal rank is taken from a looser threshold.
noisy = add_noise(F, 0.01, seed=1)
found = locate(pseudospectrum(noisy, grid, threshold=1e-2), expected_M=3)
print("\n1% noise errors / h:", np.round(localization_error(found, truth) / h, 2))
