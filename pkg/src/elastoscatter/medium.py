"""Isotropic elastic background medium, plane incident waves and shear
polarizations.

Wave speeds are ``c_p = sqrt(lambda + 2 mu)`` and ``c_s = sqrt(mu)`` (unit
mass density) and the wavenumbers are ``omega / c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

#: below this value of ``theta_x**2 + theta_y**2`` a direction is a pole
POLE_R2 = 1e-14


@dataclass(frozen=True)
class ElasticMedium:
    """Lamé parameters and angular frequency, with derived quantities."""

    lam: float
    mu: float
    omega: float
    c_p: float = field(init=False)
    c_s: float = field(init=False)
    kappa_p: float = field(init=False)
    kappa_s: float = field(init=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError(f"mu > 0 violated (mu = {self.mu})")
        if not 3 * self.lam + 2 * self.mu > 0:
            raise ParameterError(
                f"3*lambda + 2*mu > 0 violated (3*lambda + 2*mu = "
                f"{3 * self.lam + 2 * self.mu})")
        if not self.omega >= 0:
            raise ParameterError(f"omega >= 0 violated (omega = {self.omega})")
        c_p = float(np.sqrt(self.lam + 2 * self.mu))
        c_s = float(np.sqrt(self.mu))
        object.__setattr__(self, "c_p", c_p)
        object.__setattr__(self, "c_s", c_s)
        object.__setattr__(self, "kappa_p", self.omega / c_p)
        object.__setattr__(self, "kappa_s", self.omega / c_s)

    @property
    def wavelength_s(self) -> float:
        """Shear wavelength ``2 pi / kappa_s``."""
        if self.omega == 0:
            return np.inf
        return 2 * np.pi / self.kappa_s

    def speed(self, kind: str) -> float:
        return self.c_p if kind == "p" else self.c_s

    def wavenumber(self, kind: str) -> float:
        return self.kappa_p if kind == "p" else self.kappa_s

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "omega": self.omega}

    @classmethod
    def from_dict(cls, d: dict) -> "ElasticMedium":
        return cls(float(d["lambda"]), float(d["mu"]), float(d["omega"]))


def make_medium(lam: float, mu: float, omega: float) -> ElasticMedium:
    return ElasticMedium(float(lam), float(mu), float(omega))


@dataclass(frozen=True)
class WaveKind:
    """Incident wave type: ``"P"``, ``"SH"``, ``"SV"`` or a mixed shear wave
    ``"S"`` with weights ``(alpha, beta)`` on the (h, v) polarizations."""

    name: str
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.name not in ("P", "SH", "SV", "S"):
            raise ParameterError(f"unknown wave kind {self.name!r}")
        if self.name == "S" and self.alpha == 0 and self.beta == 0:
            raise ParameterError("S(alpha, beta) needs (alpha, beta) != (0, 0)")

    @property
    def is_pressure(self) -> bool:
        return self.name == "P"


P = WaveKind("P")
SH = WaveKind("SH")
SV = WaveKind("SV")


def S(alpha: float, beta: float) -> WaveKind:
    return WaveKind("S", float(alpha), float(beta))


def _as_directions(theta):
    theta = np.asarray(theta, dtype=float)
    return theta, theta.reshape(-1, 3)


def rotation_to_e3(theta) -> np.ndarray:
    """Rotation matrix ``R`` with ``R @ theta = e3``.

    ``theta`` may be a single unit vector or an array of shape ``(..., 3)``;
    the result has shape ``(..., 3, 3)``. The poles use fixed conventions:
    ``+e3 -> I`` and ``-e3 -> diag(1, -1, -1)``.
    """
    theta, flat = _as_directions(theta)
    tx, ty, tz = flat[:, 0], flat[:, 1], flat[:, 2]
    r2 = tx**2 + ty**2
    pole = r2 < POLE_R2
    safe = np.where(pole, 1.0, r2)
    R = np.empty((len(flat), 3, 3))
    R[:, 0, 0] = (ty**2 + tx**2 * tz) / safe
    R[:, 0, 1] = -tx * ty * (1 - tz) / safe
    R[:, 0, 2] = -tx
    R[:, 1, 0] = R[:, 0, 1]
    R[:, 1, 1] = (tx**2 + ty**2 * tz) / safe
    R[:, 1, 2] = -ty
    R[:, 2, 0] = tx
    R[:, 2, 1] = ty
    R[:, 2, 2] = tz
    if pole.any():
        north = pole & (tz > 0)
        south = pole & (tz <= 0)
        R[north] = np.eye(3)
        R[south] = np.diag([1.0, -1.0, -1.0])
    return R.reshape(theta.shape[:-1] + (3, 3))


def shear_polarizations(theta):
    """Horizontal and vertical shear directions ``(theta_h, theta_v)``.

    These are the first two rows of :func:`rotation_to_e3`, so
    ``(theta_h, theta_v, theta)`` is a right-handed orthonormal frame.
    """
    R = rotation_to_e3(theta)
    return R[..., 0, :], R[..., 1, :]


def polarization(kind, theta) -> np.ndarray:
    """Unit polarization vector(s) for ``kind`` in ``{"p", "sh", "sv"}``,
    a :class:`WaveKind`, or a pair of shear weights ``(alpha, beta)``."""
    if isinstance(kind, WaveKind):
        if kind.name == "P":
            kind = "p"
        elif kind.name == "SH":
            kind = "sh"
        elif kind.name == "SV":
            kind = "sv"
        else:
            kind = (kind.alpha, kind.beta)
    theta = np.asarray(theta, dtype=float)
    if isinstance(kind, str):
        if kind == "p":
            return theta.copy()
        h, v = shear_polarizations(theta)
        if kind == "sh":
            return h
        if kind == "sv":
            return v
        raise ParameterError(f"unknown polarization kind {kind!r}")
    alpha, beta = kind
    if alpha == 0 and beta == 0:
        raise ParameterError("shear weights (0, 0) give no polarization")
    h, v = shear_polarizations(theta)
    w = alpha * h + beta * v
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def kind_speed_key(kind) -> str:
    """``"p"`` for pressure kinds, ``"s"`` for every shear kind."""
    if isinstance(kind, WaveKind):
        return "p" if kind.is_pressure else "s"
    return "p" if kind == "p" else "s"


def incident_field(kind, theta, x, medium: ElasticMedium) -> np.ndarray:
    """Unit-amplitude plane wave of type ``kind`` travelling along ``theta``,
    evaluated at points ``x`` of shape ``(..., 3)``."""
    if isinstance(kind, str) and kind in ("P", "SH", "SV"):
        kind = WaveKind(kind)
    pol = polarization(kind, theta)
    k = medium.wavenumber(kind_speed_key(kind))
    phase = np.exp(1j * k * (np.asarray(x, dtype=float) @ np.asarray(theta, dtype=float)))
    return phase[..., None] * pol
