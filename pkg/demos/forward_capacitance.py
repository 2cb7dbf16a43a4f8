"""
Elastic capacitance of small obstacles
======================================

Compute acoustic and elastic capacitances of a few reference bodies with
the boundary element solver, and watch the sphere converge to its
closed-form value as the mesh is refined.
"""

import numpy as np

from elastoscatter import acoustic_capacitance, elastic_capacitance, make_shape
from elastoscatter.bem import sphere_elastic_capacitance

lam, mu = 2.0, 1.0

# The unit sphere has acoustic capacitance 4*pi. Each refinement splits
# every triangle in four.
for level in range(1, 5):
    mesh = make_shape("sphere", 1.0, level)
    ca = acoustic_capacitance(mesh)
    print(f"refinement {level}: {mesh.n_triangles:5d} panels, "
          f"C^a = {ca:.5f}, rel. error {abs(ca / (4 * np.pi) - 1):.2e}")

# A constant density also solves the elastic problem on a ball, so the
# elastic capacitance is a multiple of the identity.
mesh = make_shape("sphere", 1.0, 3)
C = elastic_capacitance(mesh, lam, mu)
print("\nsphere elastic capacitance (diagonal):", np.round(np.diag(C.matrix), 4))
print("closed form:", round(sphere_elastic_capacitance(1.0, lam, mu), 4))

# Non-spherical bodies are anisotropic, but their eigenvalues stay between
# mu*C^a and (lambda + 2 mu)*C^a.
for kind, params in [("box", (1, 1, 1)), ("ellipsoid", (2, 1, 1))]:
    mesh = make_shape(kind, params, 2)
    ca = acoustic_capacitance(mesh)
    eig = elastic_capacitance(mesh, lam, mu).eigenvalues
    print(f"{kind:9s}: {mu * ca:7.3f} <= {eig[0]:7.3f} <= {eig[-1]:7.3f} "
          f"<= {(lam + 2 * mu) * ca:7.3f}")
