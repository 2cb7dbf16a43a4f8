"""Closed triangulated surfaces: built-in reference bodies, OFF I/O and
geometric radii."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .errors import ParameterError

SHAPE_KINDS = ("sphere", "ellipsoid", "box")


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """A closed, outward-oriented triangle mesh.

    Parameters
    ----------
    vertices : (nv, 3) float array
    triangles : (nt, 3) int array of vertex indices, counter-clockwise seen
        from outside.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3:
            raise ParameterError("vertices and triangles must have shape (n, 3)")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """(nt, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    @cached_property
    def _cross(self):
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        return self._cross / (2 * self.areas[:, None])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def signed_volume(self) -> float:
        c = self.corners
        return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6)

    @property
    def diameter(self) -> float:
        return 2 * self.circumradius_vertices()

    def circumradius_vertices(self) -> float:
        pts = self.vertices
        if len(pts) > 4:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # degenerate point set; fall back to all vertices
                pass
        return 0.5 * float(pdist(pts).max())

    def validate(self) -> None:
        """Raise :class:`ParameterError` unless the mesh is a closed,
        consistently outward-oriented 2-manifold without degenerate faces."""
        if np.any(self.areas <= 1e-14 * max(self.area, 1e-300)):
            raise ParameterError("mesh has a zero-area triangle")
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        undirected = np.sort(directed, axis=1)
        _, counts = np.unique(undirected, axis=0, return_counts=True)
        if np.any(counts != 2):
            raise ParameterError("mesh is not closed: some edge is not shared by exactly 2 triangles")
        _, dcounts = np.unique(directed, axis=0, return_counts=True)
        if np.any(dcounts != 1):
            raise ParameterError("mesh orientation is inconsistent")
        if self.signed_volume <= 0:
            raise ParameterError("mesh is inward oriented (signed volume <= 0)")

    def transformed(self, epsilon: float = 1.0, center=(0.0, 0.0, 0.0)) -> "SurfaceMesh":
        """The body ``epsilon * B + center``."""
        return SurfaceMesh(epsilon * self.vertices + np.asarray(center, dtype=float),
                           self.triangles)

    def contains_origin(self) -> bool:
        """Winding-number test for the origin."""
        c = self.corners
        a, b, d = c[:, 0], c[:, 1], c[:, 2]
        la, lb, ld = (np.linalg.norm(p, axis=1) for p in (a, b, d))
        num = np.einsum("ij,ij->i", a, np.cross(b, d))
        den = (la * lb * ld + np.einsum("ij,ij->i", a, b) * ld
               + np.einsum("ij,ij->i", b, d) * la + np.einsum("ij,ij->i", d, a) * lb)
        winding = 2 * np.arctan2(num, den).sum() / (4 * np.pi)
        return bool(abs(winding - 1) < 1e-6)


# -- construction -----------------------------------------------------------

def _icosahedron():
    p = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
        [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
        [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
    ], dtype=float)
    t = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return v / np.linalg.norm(v, axis=1, keepdims=True), t


def _cube():
    v = np.array([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)], dtype=float)
    # index = 4*(x>0) + 2*(y>0) + (z>0)
    quads = [
        (0, 1, 3, 2),  # x = -1
        (4, 6, 7, 5),  # x = +1
        (0, 4, 5, 1),  # y = -1
        (2, 3, 7, 6),  # y = +1
        (0, 2, 6, 4),  # z = -1
        (1, 5, 7, 3),  # z = +1
    ]
    t = []
    for a, b, c, d in quads:
        t += [(a, b, c), (a, c, d)]
    return v, np.array(t)


def subdivide(vertices: np.ndarray, triangles: np.ndarray):
    """Split every triangle into four through its edge midpoints."""
    edges = np.sort(np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]],
                                    triangles[:, [2, 0]]]), axis=1)
    unique, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    mids = 0.5 * (vertices[unique[:, 0]] + vertices[unique[:, 1]])
    nt = len(triangles)
    m01 = len(vertices) + inverse[:nt]
    m12 = len(vertices) + inverse[nt:2 * nt]
    m20 = len(vertices) + inverse[2 * nt:]
    a, b, c = triangles.T
    new = np.concatenate([
        np.stack([a, m01, m20], axis=1),
        np.stack([m01, b, m12], axis=1),
        np.stack([m20, m12, c], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    return np.vstack([vertices, mids]), new


def make_shape(kind: str, params=None, refinement: int = 2) -> SurfaceMesh:
    """Built-in reference body.

    ``sphere``: ``params`` is the radius (default 1). ``ellipsoid``: the
    three semi-axes. ``box``: the three half-widths. Spheres and ellipsoids
    start from an icosahedron, the box from a 12-triangle cube; each
    refinement level multiplies the triangle count by four.
    """
    if int(refinement) != refinement or refinement < 0:
        raise ParameterError("refinement must be a non-negative integer")
    if kind == "sphere":
        radius = 1.0 if params is None else float(np.ravel(params)[0])
        scale = np.full(3, radius)
    elif kind in ("ellipsoid", "box"):
        scale = np.ones(3) if params is None else np.asarray(params, dtype=float).reshape(3)
    else:
        raise ParameterError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    if not np.all(scale > 0):
        raise ParameterError(f"{kind} parameters must be positive, got {scale}")

    if kind == "box":
        v, t = _cube()
        for _ in range(refinement):
            v, t = subdivide(v, t)
    else:
        v, t = _icosahedron()
        for _ in range(refinement):
            v, t = subdivide(v, t)
            v = v / np.linalg.norm(v, axis=1, keepdims=True)
    mesh = SurfaceMesh(v * scale, t)
    mesh.validate()
    return mesh


# -- OFF files --------------------------------------------------------------

def write_off(mesh: SurfaceMesh, path) -> None:
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.n_triangles} 0"]
    lines += [" ".join(repr(float(c)) for c in p) for p in mesh.vertices]
    lines += ["3 " + " ".join(str(int(i)) for i in tri) for tri in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> SurfaceMesh:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParameterError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise ParameterError(f"{path}: only triangular faces are supported")
            faces.append([int(s) for s in tokens[pos + 1:pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        raise ParameterError(f"{path}: malformed OFF file ({exc})") from exc
    mesh = SurfaceMesh(verts, np.array(faces))
    mesh.validate()
    return mesh


# -- radii ------------------------------------------------------------------

def inradius(mesh: SurfaceMesh) -> float:
    """Radius of the largest ball inside a convex mesh.

    Solved exactly as the Chebyshev-center linear program over the face
    half-spaces ``n_k . x <= n_k . c_k``.
    """
    n = mesh.normals
    rhs = np.einsum("ij,ij->i", n, mesh.centroids)
    A = np.hstack([n, np.ones((len(n), 1))])
    res = linprog(c=[0, 0, 0, -1], A_ub=A, b_ub=rhs,
                  bounds=[(None, None)] * 3 + [(0, None)], method="highs")
    if not res.success:
        raise ParameterError(f"inradius LP failed: {res.message}")
    return float(res.x[3])


def radii(mesh: SurfaceMesh) -> tuple[float, float]:
    """``(R_i, R_e)``: inscribed radius (convex bodies) and half the
    diameter of the vertex set."""
    return inradius(mesh), mesh.circumradius_vertices()
