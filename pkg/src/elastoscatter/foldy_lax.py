"""Foldy-Lax algebraic system for many small rigid scatterers and the
dominant far-field terms it produces."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .bem import CapacitanceMatrix, elastic_capacitance
from .errors import DatasetError, ParameterError, SolverError
from .green import kupradze
from .medium import ElasticMedium, WaveKind, incident_field, kind_speed_key, polarization
from .mesh import SurfaceMesh, make_shape, read_off

SCENE_VERSION = 1

#: channel name -> (incident kind, receive kind); "s" is the generic shear
#: wave whose polarization comes from ``Scene.shear_weights``
CHANNELS = {
    "PP": ("p", "p"), "PSh": ("p", "sh"), "PSv": ("p", "sv"),
    "ShP": ("sh", "p"), "SvP": ("sv", "p"),
    "ShSh": ("sh", "sh"), "ShSv": ("sh", "sv"), "SvSh": ("sv", "sh"), "SvSv": ("sv", "sv"),
    "PS": ("p", "s"), "SP": ("s", "p"), "SS": ("s", "s"),
}
NINE_CHANNELS = ("PP", "PSh", "PSv", "ShP", "SvP", "ShSh", "ShSv", "SvSh", "SvSv")


def parse_channel(channel: str) -> tuple[str, str]:
    try:
        return CHANNELS[channel]
    except KeyError:
        raise ParameterError(
            f"unknown channel {channel!r}; expected one of {sorted(CHANNELS)}") from None


@dataclass
class Scatterer:
    """Obstacle ``epsilon * B + center``. ``mesh`` may be ``None`` when the
    capacitance is supplied directly (point-like model)."""

    mesh: SurfaceMesh | None
    epsilon: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    shape: dict | None = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")

    @cached_property
    def vertices(self) -> np.ndarray:
        if self.mesh is None:
            return self.center[None, :]
        return self.epsilon * self.mesh.vertices + self.center

    @property
    def diameter(self) -> float:
        return 0.0 if self.mesh is None else self.epsilon * self.mesh.diameter


def _shape_mesh(desc: dict, base: Path | None) -> SurfaceMesh:
    if "off" in desc:
        path = Path(desc["off"])
        if base is not None and not path.is_absolute():
            path = base / path
        return read_off(path)
    return make_shape(desc["kind"], desc.get("params"), int(desc.get("refinement", 2)))


@dataclass
class Scene:
    """Medium, scatterers and their elastic capacitances."""

    medium: ElasticMedium
    scatterers: list
    capacitances: list
    shear_weights: tuple = (1.0, 0.0)

    def __post_init__(self):
        if len(self.scatterers) < 1:
            raise ParameterError("a scene needs at least one scatterer")
        if len(self.capacitances) != len(self.scatterers):
            raise ParameterError("one capacitance per scatterer is required")
        self.capacitances = [c if isinstance(c, CapacitanceMatrix) else CapacitanceMatrix(c)
                             for c in self.capacitances]
        c = self.centers
        if len(c) > 1 and cKDTree(c).query(c, k=2)[0][:, 1].min() == 0:
            raise ParameterError("scatterer centers must be pairwise distinct")

    @property
    def M(self) -> int:
        return len(self.scatterers)

    @property
    def centers(self) -> np.ndarray:
        return np.array([s.center for s in self.scatterers])

    @classmethod
    def build(cls, medium: ElasticMedium, scatterers, shear_weights=(1.0, 0.0)) -> "Scene":
        """Compute every capacitance with the BEM solver (cached per mesh)."""
        cache = {}
        caps = []
        for s in scatterers:
            if s.mesh is None:
                raise ParameterError("Scene.build needs a mesh on every scatterer")
            key = id(s.mesh)
            if key not in cache:
                cache[key] = elastic_capacitance(s.mesh, medium.lam, medium.mu)
            caps.append(cache[key].scaled(s.epsilon))
        return cls(medium, list(scatterers), caps, tuple(shear_weights))

    @classmethod
    def point_scatterers(cls, medium, centers, capacitances, shear_weights=(1.0, 0.0)):
        scat = [Scatterer(None, 1.0, z) for z in centers]
        return cls(medium, scat, list(capacitances), tuple(shear_weights))

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        items = []
        for s, cap in zip(self.scatterers, self.capacitances):
            items.append({
                "shape": s.shape,
                "epsilon": s.epsilon,
                "center": s.center.tolist(),
                "capacitance": cap.matrix.tolist(),
            })
        return {"version": SCENE_VERSION, "medium": self.medium.to_dict(),
                "shear_weights": list(self.shear_weights), "scatterers": items}

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "Scene":
        if d.get("version") != SCENE_VERSION:
            raise DatasetError(f"unsupported scene version {d.get('version')!r}")
        try:
            medium = ElasticMedium.from_dict(d["medium"])
            weights = tuple(d.get("shear_weights", (1.0, 0.0)))
            meshes, scat, caps = {}, [], []
            for i, item in enumerate(d["scatterers"]):
                desc = item.get("shape")
                mesh = None
                if desc is not None:
                    key = json.dumps(desc, sort_keys=True)
                    if key not in meshes:
                        meshes[key] = _shape_mesh(desc, base)
                    mesh = meshes[key]
                scat.append(Scatterer(mesh, float(item.get("epsilon", 1.0)),
                                      item["center"], desc))
                caps.append(item.get("capacitance"))
        except KeyError as exc:
            raise DatasetError(f"scene is missing required key {exc}") from exc
        if all(c is not None for c in caps):
            return cls(medium, scat, [CapacitanceMatrix(c) for c in caps], weights)
        return cls.build(medium, scat, weights)

    @classmethod
    def load(cls, path) -> "Scene":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data, base=path.parent)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


# -- geometry diagnostics ------------------------------------------------------

def scene_geometry(scene: Scene) -> dict:
    """``a`` (max diameter), ``d`` (min set distance between obstacles,
    from vertex sets) and ``d_max`` (max pairwise center distance)."""
    a = max(s.diameter for s in scene.scatterers)
    d = math.inf
    trees = [cKDTree(s.vertices) for s in scene.scatterers]
    for m in range(scene.M):
        for j in range(m + 1, scene.M):
            dist, _ = trees[j].query(scene.scatterers[m].vertices)
            d = min(d, float(dist.min()))
    c = scene.centers
    d_max = float(np.max(np.linalg.norm(c[:, None] - c[None], axis=2))) if scene.M > 1 else 0.0
    return {"a": a, "d": d, "d_max": d_max}


@dataclass(frozen=True)
class InvertibilityReport:
    a: float
    d: float
    d_max: float
    diam_omega: float
    t: float
    N_omega: int
    ratio: float
    sqrt_m1_ratio: float
    remainder_estimate: float
    t_positive: bool
    ratio_ok: bool
    separation_ok: bool

    def to_dict(self) -> dict:
        return {k: (v if not (isinstance(v, float) and math.isinf(v)) else "inf")
                for k, v in self.__dict__.items()}


def _series_term(kappa, diam, n):
    q = 0.5 * kappa * diam
    geom = float(n) if abs(1 - q) < 1e-14 else (1 - q**n) / (1 - q)
    return geom + 2.0 ** (1 - n)


def check_invertibility(scene: Scene, omega_diam: float, c0: float = 1.0,
                        c1: float = 1.0) -> InvertibilityReport:
    """Diagnostics for the sufficient invertibility condition.

    ``t`` and ``N_omega`` follow the closed-form expressions; the existence
    constants ``c0`` and ``c1`` have no known value, so the boolean flags
    are advisory.
    """
    m = scene.medium
    geo = scene_geometry(scene)
    if omega_diam <= 0:
        raise ParameterError("omega_diam must be positive")
    n_omega = int(math.floor(2 * omega_diam * max(m.kappa_s, m.kappa_p) * math.e**2))
    t = 1 / m.c_p**2
    if m.omega > 0:
        t -= 2 * omega_diam * m.omega / m.c_s**3 * _series_term(m.kappa_s, omega_diam, n_omega)
        t -= omega_diam * m.omega / m.c_p**3 * _series_term(m.kappa_p, omega_diam, n_omega)
    a, d, M = geo["a"], geo["d"], scene.M
    ratio = 0.0 if math.isinf(d) else a / d
    sq = math.sqrt(M - 1) * ratio
    rem = M * a**2
    if M > 1 and d > 0:
        rem += M * (M - 1) * a**3 / d**2 + M * (M - 1) ** 2 * a**4 / d**3
    return InvertibilityReport(
        a=a, d=d, d_max=geo["d_max"], diam_omega=omega_diam, t=t, N_omega=n_omega,
        ratio=ratio, sqrt_m1_ratio=sq, remainder_estimate=rem, t_positive=t > 0,
        ratio_ok=bool(t > 0 and ratio <= c1 / t), separation_ok=bool(sq <= c0))


# -- system ------------------------------------------------------------------

def assemble_system(scene: Scene) -> np.ndarray:
    """The ``3M x 3M`` matrix with blocks ``-C_m^{-1}`` on the diagonal and
    ``-Gamma^omega(z_m, z_j)`` off it."""
    M = scene.M
    z = scene.centers
    B = np.zeros((M, 3, M, 3), dtype=complex)
    if M > 1:
        mi, ji = np.nonzero(~np.eye(M, dtype=bool))
        B[mi, :, ji, :] = -kupradze(z[mi], z[ji], scene.medium)
    for m, cap in enumerate(scene.capacitances):
        try:
            inv = np.linalg.inv(cap.matrix)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"capacitance of scatterer {m} is singular") from exc
        # capacitances are symmetric; keep the assembled blocks exactly so
        B[m, :, m, :] = -0.5 * (inv + inv.T)
    return B.reshape(3 * M, 3 * M)


def resolve_kind(kind, scene: Scene):
    """Map ``"p"/"sh"/"sv"/"s"`` or a :class:`WaveKind` to a polarization
    spec understood by :func:`elastoscatter.medium.polarization`."""
    if isinstance(kind, WaveKind):
        if kind.name == "S":
            return (kind.alpha, kind.beta)
        return {"P": "p", "SH": "sh", "SV": "sv"}[kind.name]
    if kind == "s":
        return tuple(scene.shear_weights)
    if kind in ("p", "sh", "sv"):
        return kind
    raise ParameterError(f"unknown wave kind {kind!r}")


def incident_vector(scene: Scene, kind, theta) -> np.ndarray:
    """Stacked incident field at the centers, shape ``(3M,)`` or ``(3M, N)``
    for ``theta`` of shape ``(N, 3)``."""
    pol = resolve_kind(kind, scene)
    theta = np.asarray(theta, dtype=float)
    k = scene.medium.wavenumber(kind_speed_key(pol if isinstance(pol, str) else "s"))
    p = polarization(pol, theta)
    phase = np.exp(1j * k * (scene.centers @ theta.T))  # (M,) or (M, N)
    if theta.ndim == 1:
        return (phase[:, None] * p).reshape(-1)
    return (phase[:, None, :] * p.T[None, :, :]).reshape(3 * scene.M, -1)


@dataclass(frozen=True)
class FoldyLaxSolution:
    """Excitation vectors ``Q`` (shape ``(M, 3)``, or ``(M, 3, N)`` for a
    batch of incident waves) with the condition estimate of the system."""

    Q: np.ndarray
    condition: float
    residual: float


class FoldyLaxSystem:
    """Assembled and factorized Foldy-Lax matrix of a scene."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self.matrix = assemble_system(scene)
        self.condition = float(np.linalg.cond(self.matrix))
        if not np.isfinite(self.condition) or self.condition > 1e14:
            raise SolverError(
                f"Foldy-Lax matrix is numerically singular (cond = {self.condition:.3e})",
                condition=self.condition)
        self._lu = sla.lu_factor(self.matrix)

    @cached_property
    def scattering_matrix(self) -> np.ndarray:
        """Inverse of the system matrix."""
        return sla.lu_solve(self._lu, np.eye(len(self.matrix), dtype=complex))

    def solve_rhs(self, rhs: np.ndarray) -> FoldyLaxSolution:
        x = sla.lu_solve(self._lu, rhs)
        res = np.linalg.norm(self.matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if res > 1e-10:
            # one step of iterative refinement
            x = x + sla.lu_solve(self._lu, rhs - self.matrix @ x)
            res = np.linalg.norm(self.matrix @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        M = self.scene.M
        Q = x.reshape(M, 3) if x.ndim == 1 else x.reshape(M, 3, -1)
        return FoldyLaxSolution(Q, self.condition, float(res))

    def solve(self, kind, theta, amplitude: complex = 1.0) -> FoldyLaxSolution:
        """Solve ``B Q = U^I`` with ``U^I`` stacked incident fields."""
        return self.solve_rhs(amplitude * incident_vector(self.scene, kind, theta))


def solve(scene: Scene, kind, theta, amplitude: complex = 1.0) -> FoldyLaxSolution:
    return FoldyLaxSystem(scene).solve(kind, theta, amplitude)


def far_field(part: str, xhat, scene: Scene, sol: FoldyLaxSolution) -> np.ndarray:
    """Dominant term of the P or S far-field pattern (complex 3-vector,
    shape ``(..., 3)`` for a batch of directions)."""
    xhat = np.asarray(xhat, dtype=float)
    m = scene.medium
    if part.upper() == "P":
        c, k = m.c_p, m.kappa_p
    elif part.upper() == "S":
        c, k = m.c_s, m.kappa_s
    else:
        raise ParameterError(f"part must be 'P' or 'S', got {part!r}")
    phase = np.exp(-1j * k * (xhat @ scene.centers.T))  # (..., M)
    total = np.einsum("...m,mi->...i", phase, sol.Q)
    radial = np.sum(xhat * total, axis=-1)[..., None] * xhat
    proj = radial if part.upper() == "P" else total - radial
    return proj / (4 * np.pi * c**2)


def receive_projection(kind, xhat, scene: Scene, vector) -> np.ndarray:
    """Scalar far field: ``4 pi c^2 (pol(xhat) . U^inf)``."""
    pol = polarization(resolve_kind(kind, scene), xhat)
    c = scene.medium.c_p if kind == "p" else scene.medium.c_s
    return 4 * np.pi * c**2 * np.sum(pol * vector, axis=-1)


def scalar_far_field(channel: str, xhat, theta, scene: Scene,
                     system: FoldyLaxSystem | None = None) -> complex:
    """Scalar far-field pattern of ``channel`` (incident kind first, receive
    kind second, e.g. ``"PSh"``) for observation ``xhat`` and incidence
    ``theta``."""
    inc, rec = parse_channel(channel)
    system = system or FoldyLaxSystem(scene)
    sol = system.solve(inc, theta)
    part = "P" if rec == "p" else "S"
    u = far_field(part, xhat, scene, sol)
    return complex(receive_projection(rec, xhat, scene, u))
