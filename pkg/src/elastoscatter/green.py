"""Elastodynamic (Kupradze) and elastostatic (Kelvin) fundamental tensors,
plus the far-field kernels of the Kupradze tensor.

All kernels are written as ``A(r) I + B(r) rhat rhat^T`` and accept
broadcastable point arrays of shape ``(..., 3)``.
"""
from __future__ import annotations

from math import factorial

import numpy as np

from .errors import ParameterError, SingularityError
from .medium import ElasticMedium

# below kappa_s * r < SERIES_CUTOFF the Phi_s - Phi_p difference is summed
# as a power series; SERIES_TERMS keeps the truncation below 1e-17
SERIES_CUTOFF = 0.5
SERIES_TERMS = 24


def _separation(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r == 0):
        raise SingularityError("kernel evaluated at coincident points x == y")
    return d, r


def _assemble(A, B, d, r):
    rhat = d / r[..., None]
    out = (rhat[..., :, None] * rhat[..., None, :]) * B[..., None, None]
    idx = np.arange(3)
    out[..., idx, idx] += A[..., None]
    return out


def _series_coefficients(medium: ElasticMedium):
    """Coefficients of the r-expansion of the gradient part.

    Returns arrays ``(ca, cb)`` indexed by ``n`` so that
    ``g'(r) / (r omega^2) = sum_n ca[n] r^(n-3)`` and
    ``(g'' - g'/r) / omega^2 = sum_n cb[n] r^(n-3)``.
    """
    n = np.arange(SERIES_TERMS + 1)
    w = medium.omega
    ca = np.zeros(SERIES_TERMS + 1, dtype=complex)
    cb = np.zeros(SERIES_TERMS + 1, dtype=complex)
    for k in range(2, SERIES_TERMS + 1):
        diff = medium.c_s ** (-k) - medium.c_p ** (-k)
        base = (1j) ** k * diff * w ** (k - 2) / factorial(k) / (4 * np.pi)
        ca[k] = base * (k - 1)
        cb[k] = base * (k - 1) * (k - 3)
    return n, ca, cb


def kupradze_coefficients(r, medium: ElasticMedium):
    """Radial coefficients ``(A, B)`` of the Kupradze tensor at distance r."""
    if medium.omega <= 0:
        raise ParameterError("kupradze needs omega > 0; use kelvin() for the static case")
    r = np.asarray(r, dtype=float)
    ks, kp, w2 = medium.kappa_s, medium.kappa_p, medium.omega**2
    phi_s = np.exp(1j * ks * r) / (4 * np.pi * r)

    def closed(r):
        es, ep = np.exp(1j * ks * r), np.exp(1j * kp * r)
        d1 = (es * (1j * ks * r - 1) - ep * (1j * kp * r - 1)) / (4 * np.pi * r**2)
        d2 = (es * (3 - 3j * ks * r - (ks * r) ** 2)
              - ep * (3 - 3j * kp * r - (kp * r) ** 2)) / (4 * np.pi * r**3)
        return d1 / (r * w2), d2 / w2

    small = ks * r < SERIES_CUTOFF
    ga = np.empty(r.shape, dtype=complex)
    gb = np.empty(r.shape, dtype=complex)
    if np.any(~small):
        ga[~small], gb[~small] = closed(r[~small])
    if np.any(small):
        n, ca, cb = _series_coefficients(medium)
        rs = r[small]
        powers = rs[..., None] ** (n - 3)
        ga[small] = powers @ ca
        gb[small] = powers @ cb
    return phi_s / medium.mu + ga, gb


def kupradze(x, y, medium: ElasticMedium) -> np.ndarray:
    """Kupradze matrix ``Gamma^omega(x, y)``, shape ``(..., 3, 3)``."""
    d, r = _separation(x, y)
    A, B = kupradze_coefficients(r, medium)
    return _assemble(A, B, d, r)


def kelvin_constants(lam: float, mu: float) -> tuple[float, float]:
    """``(a, b)`` in ``Gamma^0 = (a I + b rhat rhat^T) / r``."""
    den = 8 * np.pi * mu * (lam + 2 * mu)
    return (lam + 3 * mu) / den, (lam + mu) / den


def kelvin(x, y, lam: float, mu: float) -> np.ndarray:
    """Static elastic fundamental tensor (limit of :func:`kupradze` as
    omega -> 0), shape ``(..., 3, 3)``."""
    if not (mu > 0 and 3 * lam + 2 * mu > 0):
        raise ParameterError("Lamé constraints mu > 0, 3*lambda + 2*mu > 0 violated")
    d, r = _separation(x, y)
    a, b = kelvin_constants(lam, mu)
    return _assemble(a / r, b / r, d, r)


def far_kernel(part: str, xhat, y, medium: ElasticMedium) -> np.ndarray:
    """Far-field kernel of the Kupradze tensor for observation direction
    ``xhat`` and source point ``y``.

    ``part="P"`` gives ``(xhat xhat^T) exp(-i kp xhat.y) / (4 pi cp^2)``;
    ``part="S"`` gives ``(I - xhat xhat^T) exp(-i ks xhat.y) / (4 pi cs^2)``.
    """
    xhat = np.asarray(xhat, dtype=float)
    y = np.asarray(y, dtype=float)
    outer = xhat[..., :, None] * xhat[..., None, :]
    proj = np.sum(xhat * y, axis=-1)
    if part.upper() == "P":
        c, k = medium.c_p, medium.kappa_p
        tensor = outer
    elif part.upper() == "S":
        c, k = medium.c_s, medium.kappa_s
        tensor = np.eye(3) - outer
    else:
        raise ParameterError(f"far-field part must be 'P' or 'S', got {part!r}")
    return tensor * (np.exp(-1j * k * proj) / (4 * np.pi * c**2))[..., None, None]
