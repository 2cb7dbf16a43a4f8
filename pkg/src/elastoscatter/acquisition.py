"""Direction sets, response matrices, H-matrices, noise and dataset files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DatasetError, ParameterError
from .foldy_lax import (CHANNELS, FoldyLaxSystem, Scene, far_field, parse_channel,
                        receive_projection, resolve_kind)
from .medium import ElasticMedium, kind_speed_key, polarization

DATASET_VERSION = 1
POLE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit vectors used both as incidence and observation directions."""

    vectors: np.ndarray
    scheme: str = "fibonacci"
    seed: int | None = None

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float).reshape(-1, 3)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    def __len__(self):
        return len(self.vectors)


def _near_pole(v):
    return np.any(np.linalg.norm(v[:, :2], axis=1) < POLE_TOLERANCE)


def _tilt(v, angle=0.1):
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    return v @ R.T


def direction_set(N: int, scheme: str = "fibonacci", seed: int | None = None) -> DirectionSet:
    """``N`` directions on the unit sphere.

    ``fibonacci`` is the golden-angle spiral; ``random`` draws normalized
    Gaussian vectors from ``numpy.random.default_rng(seed)``. Sets touching
    a pole of the polarization frame are rotated as a whole.
    """
    if N < 1:
        raise ParameterError("N must be at least 1")
    if scheme == "fibonacci":
        i = np.arange(N) + 0.5
        z = 1 - 2 * i / N
        r = np.sqrt(1 - z**2)
        phi = np.pi * (3 - np.sqrt(5)) * i
        v = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    elif scheme == "random":
        g = np.random.default_rng(seed).standard_normal((N, 3))
        v = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        raise ParameterError(f"unknown direction scheme {scheme!r}")
    angle = 0.1
    while _near_pole(v):
        v = _tilt(v, angle)
        angle *= 1.7
    return DirectionSet(v, scheme, seed)


def build_H(kind, dirs, centers, medium: ElasticMedium, shear_weights=(1.0, 0.0)) -> np.ndarray:
    """``3M x N`` matrix whose block ``m`` column ``l`` is
    ``pol(theta_l) exp(i (omega/c) theta_l . z_m)``."""
    theta = dirs.vectors if isinstance(dirs, DirectionSet) else np.asarray(dirs, dtype=float)
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    if len(centers) == 0:
        raise ParameterError("build_H needs at least one center")
    pol_spec = tuple(shear_weights) if kind == "s" else kind
    pol = polarization(pol_spec, theta)  # (N, 3)
    k = medium.wavenumber(kind_speed_key(kind))
    phase = np.exp(1j * k * centers @ theta.T)  # (M, N)
    return (phase[:, None, :] * pol.T[None]).reshape(3 * len(centers), len(theta))


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """``F[j, l]`` = scalar far field of ``channel`` for observation
    ``theta_j`` and incidence ``theta_l``."""

    F: np.ndarray
    channel: str
    directions: DirectionSet
    medium: ElasticMedium
    noise: dict | None = None
    shear_weights: tuple = (1.0, 0.0)

    @property
    def kinds(self) -> tuple[str, str]:
        """(incident, receive)."""
        return parse_channel(self.channel)

    @property
    def N(self) -> int:
        return self.F.shape[0]

    def with_matrix(self, F, noise=None) -> "ResponseMatrix":
        return replace(self, F=F, noise=noise)


def response_matrix(scene: Scene, channel: str, dirs: DirectionSet,
                    system: FoldyLaxSystem | None = None) -> ResponseMatrix:
    """Synthesize the response matrix by one Foldy-Lax solve per incident
    direction followed by far-field projection on every receiver."""
    inc, rec = parse_channel(channel)
    system = system or FoldyLaxSystem(scene)
    theta = dirs.vectors
    sol = system.solve(inc, theta)  # Q: (M, 3, N)
    m = scene.medium
    c, k = (m.c_p, m.kappa_p) if rec == "p" else (m.c_s, m.kappa_s)
    phase = np.exp(-1j * k * theta @ scene.centers.T)  # (N_obs, M)
    total = np.einsum("jm,mil->jli", phase, sol.Q)  # (N_obs, N_inc, 3)
    part = "P" if rec == "p" else "S"
    xhat = theta[:, None, :]
    radial = np.sum(xhat * total, axis=-1)[..., None] * xhat
    u = (radial if part == "P" else total - radial) / (4 * np.pi * c**2)
    F = receive_projection(rec, np.broadcast_to(xhat, u.shape), scene, u)
    return ResponseMatrix(F, channel, dirs, m, None, tuple(scene.shear_weights))


def factorized_response(scene: Scene, channel: str, dirs: DirectionSet,
                        system: FoldyLaxSystem | None = None) -> np.ndarray:
    """``H^{t*} B^{-1} H^r`` formed from explicit matrices."""
    inc, rec = parse_channel(channel)
    system = system or FoldyLaxSystem(scene)
    Hr = build_H(inc, dirs, scene.centers, scene.medium, scene.shear_weights)
    Ht = build_H(rec, dirs, scene.centers, scene.medium, scene.shear_weights)
    return Ht.conj().T @ system.scattering_matrix @ Hr


def add_noise(F: ResponseMatrix, level: float, seed: int) -> ResponseMatrix:
    """Additive complex Gaussian noise with total Frobenius size about
    ``level * ||F||_F``."""
    if level < 0:
        raise ParameterError("noise level must be non-negative")
    noise = {"level": float(level), "seed": int(seed)}
    if level == 0:
        return F.with_matrix(F.F.copy(), noise)
    N = F.N
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    scale = level * np.linalg.norm(F.F) / N
    return F.with_matrix(F.F + scale * G, noise)


# -- dataset files -------------------------------------------------------------

@dataclass
class Dataset:
    """Everything needed to image and size: the response matrix and, for
    synthetic data, the ground-truth scene description."""

    response: ResponseMatrix
    truth: dict | None = None

    @property
    def has_truth(self) -> bool:
        return self.truth is not None


def truth_from_scene(scene: Scene) -> dict:
    return {
        "centers": scene.centers.tolist(),
        "epsilons": [s.epsilon for s in scene.scatterers],
        "shapes": [s.shape for s in scene.scatterers],
        "capacitances": [c.matrix.tolist() for c in scene.capacitances],
    }


def dataset_to_dict(ds: Dataset) -> dict:
    r = ds.response
    out = {
        "version": DATASET_VERSION,
        "medium": r.medium.to_dict(),
        "channel": r.channel,
        "shear_weights": list(r.shear_weights),
        "directions": r.directions.vectors.tolist(),
        "direction_scheme": {"scheme": r.directions.scheme, "seed": r.directions.seed},
        "F": [[[z.real, z.imag] for z in row] for row in r.F.tolist()],
    }
    if r.noise is not None:
        out["noise"] = r.noise
    if ds.truth is not None:
        out["truth"] = ds.truth
    return out


def dataset_from_dict(d: dict, where: str = "<dataset>") -> Dataset:
    if not isinstance(d, dict):
        raise DatasetError(f"{where}: top level must be a JSON object")
    if d.get("version") != DATASET_VERSION:
        raise DatasetError(f"{where}: unsupported dataset version {d.get('version')!r}")
    try:
        medium = ElasticMedium.from_dict(d["medium"])
        channel = d["channel"]
        if channel not in CHANNELS:
            raise DatasetError(f"{where}: unknown channel {channel!r}")
        scheme = d.get("direction_scheme", {})
        dirs = DirectionSet(np.array(d["directions"], dtype=float),
                            scheme.get("scheme", "fibonacci"), scheme.get("seed"))
        raw = np.array(d["F"], dtype=float)
    except KeyError as exc:
        raise DatasetError(f"{where}: missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"{where}: malformed numeric data ({exc})") from exc
    N = len(dirs)
    if raw.shape != (N, N, 2):
        raise DatasetError(f"{where}: 'F' must have shape ({N}, {N}, 2), got {raw.shape}")
    F = raw[..., 0] + 1j * raw[..., 1]
    resp = ResponseMatrix(F, channel, dirs, medium, d.get("noise"),
                          tuple(d.get("shear_weights", (1.0, 0.0))))
    return Dataset(resp, d.get("truth"))


def save_dataset(path, ds: Dataset) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(ds)))


def load_dataset(path) -> Dataset:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return dataset_from_dict(data, str(path))
