"""MUSIC localization: noise-space projector, test vectors, pseudospectrum
and peak extraction."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter

from .acquisition import DirectionSet, ResponseMatrix
from .errors import ConfigError, ParameterError
from .medium import ElasticMedium, kind_speed_key, polarization

log = logging.getLogger(__name__)

NORM_FLOOR = 1e-14
DEFAULT_THRESHOLD = 1e-8
NOISY_THRESHOLD = 1e-2


@dataclass(frozen=True, eq=False)
class NoiseProjector:
    """Orthogonal projector onto the orthogonal complement of the range of
    ``F`` (the null space of ``F^*``), stored through an orthonormal basis."""

    basis: np.ndarray
    signal_rank: int
    singular_values: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ v)

    def residual_norm(self, v: np.ndarray) -> np.ndarray:
        """``||P v||`` for the columns of ``v``."""
        return np.linalg.norm(self.basis.conj().T @ v, axis=0)


def noise_projector(F, rank: int | None = None, threshold: float = DEFAULT_THRESHOLD,
                    gram: bool = False) -> NoiseProjector:
    """Noise projector from the SVD of ``F``.

    With ``rank`` given the signal space is the span of the first ``rank``
    left singular vectors; otherwise the smallest ``k`` with
    ``sigma_{k+1} / sigma_1 < threshold``. ``gram=True`` takes the SVD of
    ``F F^*``, which has the same left singular subspace.
    """
    A = F.F if isinstance(F, ResponseMatrix) else np.asarray(F)
    N = A.shape[0]
    if N < 2:
        raise ParameterError("the response matrix must be at least 2 x 2")
    if gram:
        A = A @ A.conj().T
    U, s, _ = np.linalg.svd(A)
    if s[0] <= np.finfo(float).tiny or s[0] == 0:
        raise ParameterError("degenerate data: all singular values vanish")
    if rank is None:
        small = np.nonzero(s / s[0] < threshold)[0]
        k = int(small[0]) if len(small) else N
    else:
        k = int(rank)
        if not 0 <= k < N:
            raise ParameterError(f"signal rank must satisfy 0 <= k < N = {N}, got {k}")
    if k >= N:
        raise ParameterError("no noise subspace: every singular value is above the threshold")
    return NoiseProjector(U[:, k:], k, s)


def test_vectors(kind: str, points, dirs, medium: ElasticMedium,
                 shear_weights=(1.0, 0.0)) -> np.ndarray:
    """Test vectors for all three components at every point.

    Returns shape ``(3, N, G)``: entry ``[j, n, g]`` is
    ``(pol(theta_n) . e_j) exp(-i (omega/c) theta_n . z_g)``.
    """
    theta = dirs.vectors if isinstance(dirs, DirectionSet) else np.asarray(dirs, dtype=float)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    pol = polarization(tuple(shear_weights) if kind == "s" else kind, theta)  # (N, 3)
    k = medium.wavenumber(kind_speed_key(kind))
    phase = np.exp(-1j * k * theta @ points.T)  # (N, G)
    return pol.T[:, :, None] * phase[None]


def test_vector(kind: str, j: int, z, dirs, medium: ElasticMedium,
                shear_weights=(1.0, 0.0)) -> np.ndarray:
    """Test vector ``phi^j_{z,kind}`` (``j`` in 1..3) of length N."""
    if j not in (1, 2, 3):
        raise ParameterError("component j must be 1, 2 or 3")
    return test_vectors(kind, z, dirs, medium, shear_weights)[j - 1, :, 0]


@dataclass(frozen=True, eq=False)
class ImagingGrid:
    """Axis-aligned box sampled with ``counts`` points per axis (endpoints
    included); points are enumerated in C order (x slowest)."""

    lower: np.ndarray
    upper: np.ndarray
    counts: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(3)
        hi = np.asarray(self.upper, dtype=float).reshape(3)
        counts = tuple(int(c) for c in self.counts)
        if any(c < 1 for c in counts):
            raise ParameterError("grid counts must be >= 1")
        if np.any((hi < lo) | ((hi == lo) & (np.array(counts) > 1))):
            raise ParameterError("grid box is empty or inverted")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_spacing(cls, lower, upper, h: float) -> "ImagingGrid":
        """Grid with spacing ``h`` starting at ``lower``; the upper corner is
        extended to a whole number of cells."""
        if not h > 0:
            raise ParameterError("grid spacing must be positive")
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if np.any(hi <= lo):
            raise ParameterError("grid box is empty")
        n = np.ceil((hi - lo) / h - 1e-9).astype(int)
        return cls(lo, lo + n * h, tuple(n + 1))

    @property
    def axes(self) -> list:
        return [np.linspace(l, u, c) for l, u, c in zip(self.lower, self.upper, self.counts)]

    @property
    def spacing(self) -> np.ndarray:
        c = np.array(self.counts)
        return np.where(c > 1, (self.upper - self.lower) / np.maximum(c - 1, 1), 0.0)

    @property
    def h(self) -> float:
        s = self.spacing
        return float(s[s > 0].max()) if np.any(s > 0) else 0.0

    @cached_property
    def points(self) -> np.ndarray:
        X, Y, Z = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


@dataclass(frozen=True, eq=False)
class Pseudospectrum:
    """``values`` is the union field (max over components of the normalized
    fields); ``per_component[j-1]`` holds ``1 / ||P phi^j_z||``."""

    grid: ImagingGrid
    values: np.ndarray
    per_component: np.ndarray
    kind: str
    j: object
    signal_rank: int
    peaks: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def field(self, j="union") -> np.ndarray:
        return self.values if j == "union" else self.per_component[int(j) - 1]

    def to_csv(self, path, j="union") -> None:
        vals = self.field(j).ravel()
        lines = ["x,y,z,value"]
        lines += [f"{p[0]!r},{p[1]!r},{p[2]!r},{v!r}"
                  for p, v in zip(self.grid.points.tolist(), vals.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {
            "kind": self.kind, "j": self.j, "signal_rank": self.signal_rank,
            "grid": {"lower": self.grid.lower.tolist(), "upper": self.grid.upper.tolist(),
                     "counts": list(self.grid.counts)},
            "max": float(self.values.max()),
            "peaks": np.asarray(self.peaks).tolist(),
        }


def pseudospectrum(F: ResponseMatrix, grid: ImagingGrid, kind: str | None = None,
                   j="union", rank: int | None = None, threshold: float = DEFAULT_THRESHOLD,
                   gram: bool = False, chunk: int = 20000) -> Pseudospectrum:
    """Evaluate ``I(z) = 1 / ||P phi^j_z||`` over the grid.

    ``kind`` must be the receive kind of the channel (default: that kind).
    For the union field each component is normalized by ``||phi^j||``,
    which does not depend on ``z``.
    """
    _, rec = F.kinds
    if kind is None:
        kind = rec
    if kind != rec:
        raise ConfigError(
            f"test-vector kind {kind!r} does not match the receive kind {rec!r} "
            f"of channel {F.channel}")
    proj = noise_projector(F, rank=rank, threshold=threshold, gram=gram)
    pts = grid.points
    per = np.empty((3, len(pts)))
    norms = np.zeros(3)
    for start in range(0, len(pts), chunk):
        phi = test_vectors(kind, pts[start:start + chunk], F.directions, F.medium,
                           F.shear_weights)
        for c in range(3):
            per[c, start:start + chunk] = proj.residual_norm(phi[c])
        norms = np.linalg.norm(phi[:, :, 0], axis=1)
    per = 1.0 / np.maximum(per, NORM_FLOOR)
    normalized = per / np.maximum(norms, NORM_FLOOR)[:, None]
    values = normalized.max(axis=0) if j == "union" else per[int(j) - 1]
    shape = grid.counts
    return Pseudospectrum(grid, values.reshape(shape), per.reshape((3,) + shape),
                          kind, j, proj.signal_rank)


def locate(ps: Pseudospectrum, expected_M: int | None = None, rel_threshold: float = 0.5,
           r_min: float | None = None, j="union") -> np.ndarray:
    """Peak locations, strongest first.

    Local maxima over the 26-neighborhood above ``rel_threshold`` times the
    global maximum, thinned by non-maximum suppression within ``r_min``
    (default two grid cells). With ``expected_M`` only the strongest
    ``expected_M`` survivors are returned.
    """
    field_ = ps.field(j)
    if field_.size == 0:
        raise ParameterError("empty pseudospectrum")
    if r_min is None:
        r_min = 2 * ps.grid.h
    is_max = field_ == maximum_filter(field_, size=3, mode="nearest")
    candidates = np.nonzero(is_max.ravel() & (field_.ravel() >= rel_threshold * field_.max()))[0]
    vals = field_.ravel()[candidates]
    order = candidates[np.argsort(-vals, kind="stable")]
    pts = ps.grid.points
    kept = []
    for idx in order:
        p = pts[idx]
        if all(np.linalg.norm(p - q) > r_min for q in kept):
            kept.append(p)
        if expected_M is not None and len(kept) == expected_M:
            break
    if not kept:
        log.warning("no pseudospectrum peak above %.2f of the maximum", rel_threshold)
        return np.zeros((0, 3))
    return np.array(kept)


def localization_error(found, truth) -> np.ndarray:
    """Distance from each true center to the nearest detected peak."""
    truth = np.asarray(truth, dtype=float).reshape(-1, 3)
    found = np.asarray(found, dtype=float).reshape(-1, 3)
    if len(found) == 0:
        return np.full(len(truth), np.inf)
    return np.linalg.norm(truth[:, None] - found[None], axis=2).min(axis=1)


def save_peaks(path, ps: Pseudospectrum, peaks, params: dict | None = None) -> None:
    summary = ps.summary()
    summary["peaks"] = np.asarray(peaks).tolist()
    summary["parameters"] = params or {}
    Path(path).write_text(json.dumps(summary, indent=1))
