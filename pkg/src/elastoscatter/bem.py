"""First-kind single-layer solver for acoustic and elastic capacitances.

Densities are piecewise constant on the triangles and collocated at the
centroids. Self-panel integrals are done analytically (``1/r``) or by a
Duffy-type polar map (``rhat rhat^T / r``); panels close to the collocation
point use a 7-point triangle rule, the rest a one-point rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.spatial.distance import cdist

from .errors import ParameterError, SolverError
from .green import kelvin_constants
from .mesh import SurfaceMesh

# near-field pairs: centroid distance below NEAR_FACTOR * panel diameter
NEAR_FACTOR = 3.0
DUFFY_POINTS = 16


@dataclass(frozen=True)
class CapacitanceMatrix:
    """Symmetric positive definite 3x3 elastic capacitance.

    ``provenance`` is ``"computed"`` for forward BEM results and
    ``"recovered"`` for matrices extracted from far-field data.
    """

    matrix: np.ndarray
    provenance: str = "computed"
    warnings: tuple = field(default=())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(3, 3)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues."""
        return np.linalg.eigvalsh(self.matrix)

    @property
    def is_positive_definite(self) -> bool:
        return bool(self.eigenvalues[0] > 0)

    def scaled(self, factor: float) -> "CapacitanceMatrix":
        return CapacitanceMatrix(factor * self.matrix, self.provenance, self.warnings)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


# -- quadrature ---------------------------------------------------------------

# 7-point degree-5 rule on the reference triangle (barycentric, weights sum 1)
_a1, _b1 = 0.059715871789770, 0.470142064105115
_a2, _b2 = 0.797426985353087, 0.101286507323456
_W7 = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
_L7 = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _b1, _b1], [_b1, _a1, _b1], [_b1, _b1, _a1],
    [_a2, _b2, _b2], [_b2, _a2, _b2], [_b2, _b2, _a2],
])


def self_integral_inverse_distance(corners: np.ndarray, point=None) -> np.ndarray:
    """Exact ``int_T 1/|p - s| ds`` for in-plane ``p`` (default: centroid).

    ``corners`` has shape ``(n, 3, 3)``. The triangle is split into three
    sub-triangles with apex ``p``; each contributes
    ``h (asinh(t_B/h) - asinh(t_A/h))`` for the edge ``AB`` at height ``h``.
    """
    corners = np.asarray(corners, dtype=float)
    p = corners.mean(axis=1) if point is None else np.asarray(point, dtype=float)
    total = np.zeros(len(corners))
    for i in range(3):
        A = corners[:, i]
        B = corners[:, (i + 1) % 3]
        e = B - A
        L = np.linalg.norm(e, axis=1)
        u = e / L[:, None]
        tA = np.einsum("ij,ij->i", A - p, u)
        foot = A - tA[:, None] * u
        h = np.linalg.norm(foot - p, axis=1)
        tB = tA + L
        total += h * (np.arcsinh(tB / h) - np.arcsinh(tA / h))
    return total


def self_integral_dyadic(corners: np.ndarray, n_points: int = DUFFY_POINTS) -> np.ndarray:
    """``int_T rhat rhat^T / r ds`` from the centroid, shape ``(n, 3, 3)``.

    Duffy map of each sub-triangle ``(p, A, B)``:
    ``s = p + u (w(v))``, ``w(v) = (A - p) + v (B - A)``, Jacobian
    ``2 |sub| u``. The ``1/r`` singularity cancels the ``u`` factor and the
    integrand no longer depends on ``u``, leaving a Gauss rule in ``v``.
    """
    corners = np.asarray(corners, dtype=float)
    p = corners.mean(axis=1)
    xg, wg = np.polynomial.legendre.leggauss(n_points)
    v = 0.5 * (xg + 1)
    wv = 0.5 * wg
    out = np.zeros((len(corners), 3, 3))
    for i in range(3):
        A = corners[:, i] - p
        B = corners[:, (i + 1) % 3] - p
        twice_area = np.linalg.norm(np.cross(A, B), axis=1)
        w = A[:, None, :] + v[None, :, None] * (B - A)[:, None, :]
        norm = np.linalg.norm(w, axis=2)
        integrand = w[..., :, None] * w[..., None, :] / norm[..., None, None] ** 3
        out += twice_area[:, None, None] * np.einsum("q,nqij->nij", wv, integrand)
    return out


def _near_pairs(mesh: SurfaceMesh, dist: np.ndarray):
    size = np.max(np.linalg.norm(mesh.corners - mesh.centroids[:, None, :], axis=2), axis=1)
    near = dist < NEAR_FACTOR * 2 * size[None, :]
    np.fill_diagonal(near, False)
    return np.nonzero(near)


# -- assembly -------------------------------------------------------------------

def single_layer_matrix(mesh: SurfaceMesh) -> np.ndarray:
    """Collocation matrix of ``S f(t) = int f(s) / (4 pi |t - s|) ds``."""
    c = mesh.centroids
    dist = cdist(c, c)
    np.fill_diagonal(dist, 1.0)
    S = mesh.areas[None, :] / dist
    k, l = _near_pairs(mesh, dist)
    if len(k):
        q = np.einsum("pa,lai->lpi", _L7, mesh.corners[l])
        r = np.linalg.norm(c[k][:, None, :] - q, axis=2)
        S[k, l] = mesh.areas[l] * (_W7 / r).sum(axis=1)
    S[np.diag_indices_from(S)] = self_integral_inverse_distance(mesh.corners)
    return S / (4 * np.pi)


def kelvin_single_layer_matrix(mesh: SurfaceMesh, lam: float, mu: float) -> np.ndarray:
    """Collocation matrix of the Kelvin single layer, shape ``(3n, 3n)``,
    with unknowns ordered panel-major (``3 k + i``)."""
    if not (mu > 0 and 3 * lam + 2 * mu > 0):
        raise ParameterError("Lamé constraints mu > 0, 3*lambda + 2*mu > 0 violated")
    a, b = kelvin_constants(lam, mu)
    c = mesh.centroids
    n = len(c)
    A = mesh.areas
    dist = cdist(c, c)
    np.fill_diagonal(dist, 1.0)
    K = np.empty((n, 3, n, 3))
    inv = A[None, :] / dist
    inv3 = A[None, :] / dist**3
    for i in range(3):
        di = c[:, None, i] - c[None, :, i]
        for j in range(i, 3):
            dj = c[:, None, j] - c[None, :, j]
            block = b * di * dj * inv3
            if i == j:
                block += a * inv
            K[:, i, :, j] = block
            if j != i:
                K[:, j, :, i] = block
    del inv, inv3

    k, l = _near_pairs(mesh, dist)
    if len(k):
        q = np.einsum("pa,lai->lpi", _L7, mesh.corners[l])
        d = c[k][:, None, :] - q
        r = np.linalg.norm(d, axis=2)
        w = _W7[None, :] * A[l][:, None]
        blocks = (np.einsum("np,np->n", w, 1 / r)[:, None, None] * a * np.eye(3)
                  + b * np.einsum("np,npi,npj->nij", w / r**3, d, d))
        K[k, :, l, :] = blocks

    idx = np.arange(n)
    self_blocks = (a * self_integral_inverse_distance(mesh.corners)[:, None, None] * np.eye(3)
                   + b * self_integral_dyadic(mesh.corners))
    K[idx, :, idx, :] = self_blocks
    return K.reshape(3 * n, 3 * n)


def _solve(matrix, rhs, what):
    try:
        lu = sla.lu_factor(matrix, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"{what}: factorization failed ({exc})") from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= 1e-14 * diag.max():
        raise SolverError(f"{what}: discrete single-layer system is singular")
    return sla.lu_solve(lu, rhs, check_finite=False)


def acoustic_capacitance(mesh: SurfaceMesh) -> float:
    """Capacitance ``int sigma ds`` with ``S sigma = 1`` on the surface."""
    sigma = _solve(single_layer_matrix(mesh), np.ones(mesh.n_triangles), "acoustic capacitance")
    return float(sigma @ mesh.areas)


def elastic_capacitance(mesh: SurfaceMesh, lam: float, mu: float) -> CapacitanceMatrix:
    """Elastic capacitance matrix ``int sigma ds`` where the 3x3 density
    ``sigma`` solves the Kelvin single-layer equation with identity data.

    The discrete matrix is symmetrized; the asymmetry of the raw result is
    of the order of the discretization error.
    """
    n = mesh.n_triangles
    rhs = np.tile(np.eye(3), (n, 1))
    sigma = _solve(kelvin_single_layer_matrix(mesh, lam, mu), rhs, "elastic capacitance")
    C = np.einsum("k,kij->ij", mesh.areas, sigma.reshape(n, 3, 3))
    cap = CapacitanceMatrix(0.5 * (C + C.T), "computed")
    if not cap.is_positive_definite:
        raise SolverError("elastic capacitance is not positive definite; mesh too coarse?")
    return cap


def sphere_elastic_capacitance(radius: float, lam: float, mu: float) -> float:
    """Closed-form scalar ``c`` with ``C = c I`` for a ball.

    The Kelvin single layer maps a constant density on a sphere of radius
    ``rho`` to ``4 pi rho (a + b/3)`` times that density.
    """
    a, b = kelvin_constants(lam, mu)
    return radius / (a + b / 3)
