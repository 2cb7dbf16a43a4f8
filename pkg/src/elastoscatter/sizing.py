"""Capacitance recovery from far-field data and size estimates."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .acquisition import ResponseMatrix, build_H
from .bem import CapacitanceMatrix, acoustic_capacitance, elastic_capacitance
from .errors import ParameterError, RankError, SolverError
from .medium import ElasticMedium
from .mesh import SurfaceMesh, make_shape, radii

log = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12
NORMAL_EQUATIONS_MAX_COND = 1e10


@dataclass(frozen=True, eq=False)
class RecoveredScattering:
    """Recovered ``3M x 3M`` scattering matrix (inverse of the Foldy-Lax
    matrix) together with the conditioning of the ``H H^*`` Gram matrices."""

    matrix: np.ndarray
    centers: np.ndarray
    channel: str
    cond_transmit: float
    cond_receive: float
    used_svd: bool = False


def _left_pinv(H, which):
    """``(H H^*)^{-1} H`` (pseudo-inverse of ``H^*``), SVD fallback."""
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= RANK_TOLERANCE * s[0]:
        raise RankError(
            f"H^{which} is rank deficient: smallest singular value {s[-1]:.3e} "
            f"(largest {s[0]:.3e}); are two centers duplicated?",
            condition=float(s[0] / max(s[-1], 1e-300)))
    cond = float((s[0] / s[-1]) ** 2)
    if cond > NORMAL_EQUATIONS_MAX_COND:
        return np.linalg.pinv(H.conj().T), cond, True
    G = H @ H.conj().T
    return np.linalg.solve(G, H), cond, False


def recover_B(F: ResponseMatrix, centers, medium: ElasticMedium | None = None) -> RecoveredScattering:
    """Invert the factorization ``F = H^{t*} B H^r`` for ``B`` given the
    scatterer centers."""
    medium = medium or F.medium
    centers = np.asarray(centers, dtype=float).reshape(-1, 3)
    inc, rec = F.kinds
    if F.N < 3 * len(centers):
        raise ParameterError(f"need N >= 3M directions (N = {F.N}, M = {len(centers)})")
    Hr = build_H(inc, F.directions, centers, medium, F.shear_weights)
    Ht = build_H(rec, F.directions, centers, medium, F.shear_weights)
    Lt, cond_t, svd_t = _left_pinv(Ht, "t")
    Lr, cond_r, svd_r = _left_pinv(Hr, "r")
    B = Lt @ F.F @ Lr.conj().T
    return RecoveredScattering(B, centers, F.channel, cond_t, cond_r, svd_t or svd_r)


@dataclass(frozen=True)
class ExtractionResult:
    capacitances: list
    imaginary_fraction: list


def extract_capacitances(rs: RecoveredScattering) -> ExtractionResult:
    """Capacitances from the diagonal blocks of the inverse of the recovered
    scattering matrix (they equal ``-C_m^{-1}``)."""
    try:
        Bsys = np.linalg.inv(rs.matrix)
    except np.linalg.LinAlgError as exc:
        raise SolverError("recovered scattering matrix is singular") from exc
    caps, imag = [], []
    for m in range(len(rs.centers)):
        block = Bsys[3 * m:3 * m + 3, 3 * m:3 * m + 3]
        try:
            C = -np.linalg.inv(block)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"diagonal block {m} is singular") from exc
        imag.append(float(np.linalg.norm(C.imag) / max(np.linalg.norm(C), 1e-300)))
        Cr = C.real
        Cr = 0.5 * (Cr + Cr.T)
        warnings = ()
        if np.linalg.eigvalsh(Cr)[0] <= 0:
            warnings = ("recovered capacitance is not positive definite",)
            log.warning("scatterer %d: %s", m, warnings[0])
        caps.append(CapacitanceMatrix(Cr, "recovered", warnings))
    return ExtractionResult(caps, imag)


# -- size estimates ----------------------------------------------------------------

@dataclass(frozen=True)
class SizeInterval:
    """Interval for ``|boundary of D| / epsilon`` and the acoustic
    capacitance bracket implied by the eigenvalues."""

    lower: float
    upper: float
    acoustic_lower: float
    acoustic_upper: float
    inverted: bool

    def contains(self, value: float, rtol: float = 0.0) -> bool:
        return self.lower * (1 - rtol) <= value <= self.upper * (1 + rtol)


def _eig_extremes(C):
    eig = (C if isinstance(C, CapacitanceMatrix) else CapacitanceMatrix(C)).eigenvalues
    if eig[0] <= 0:
        raise ParameterError("capacitance must be positive definite")
    return float(eig[0]), float(eig[-1])


def size_interval(C, medium: ElasticMedium, c_lip: float = 1.0, C_lip: float = 1.0) -> SizeInterval:
    """``[c_lip lmax / (lambda + 2 mu), C_lip lmin / mu]``; the acoustic
    bracket is the same with unit constants."""
    if not (c_lip > 0 and C_lip > 0):
        raise ParameterError("Lipschitz constants must be positive")
    lmin, lmax = _eig_extremes(C)
    lo_a = lmax / (medium.lam + 2 * medium.mu)
    hi_a = lmin / medium.mu
    lo, hi = c_lip * lo_a, C_lip * hi_a
    return SizeInterval(lo, hi, lo_a, hi_a, bool(lo > hi))


def convex_bounds(C, medium: ElasticMedium, c_lip: float = 1.0,
                  C_lip: float = 1.0) -> tuple[float, float]:
    """``(R_i upper bound, R_e lower bound)`` for convex, centered bodies."""
    if not (c_lip > 0 and C_lip > 0):
        raise ParameterError("Lipschitz constants must be positive")
    lmin, lmax = _eig_extremes(C)
    return lmax / (c_lip * (medium.lam + 2 * medium.mu)), lmin / (C_lip * medium.mu)


@dataclass(frozen=True)
class ShapeData:
    """Forward quantities of a reference body used for calibration."""

    capacitance: CapacitanceMatrix
    acoustic: float
    area: float
    r_i: float
    r_e: float


def shape_data(mesh: SurfaceMesh, medium: ElasticMedium) -> ShapeData:
    ri, re = radii(mesh)
    return ShapeData(elastic_capacitance(mesh, medium.lam, medium.mu),
                     acoustic_capacitance(mesh), mesh.area, ri, re)


def calibrate_constants(family, medium: ElasticMedium, bound: str = "perimeter") -> tuple[float, float]:
    """Largest ``c`` and smallest ``C`` for which the chosen estimate holds
    on every member of ``family`` (meshes or :class:`ShapeData`).

    ``bound="perimeter"`` calibrates the scaled-area interval,
    ``bound="convex"`` the inscribed/circumscribed radius bounds.
    """
    family = list(family)
    if not family:
        raise ParameterError("calibration family is empty")
    data = [f if isinstance(f, ShapeData) else shape_data(f, medium) for f in family]
    lp = medium.lam + 2 * medium.mu
    lows, highs = [], []
    for d in data:
        lmin, lmax = _eig_extremes(d.capacitance)
        if bound == "perimeter":
            lows.append(d.area * lp / lmax)
            highs.append(d.area * medium.mu / lmin)
        elif bound == "convex":
            lows.append(lmax / (lp * d.r_i))
            highs.append(lmin / (medium.mu * d.r_e))
        else:
            raise ParameterError(f"unknown bound {bound!r}; expected 'perimeter' or 'convex'")
    return float(min(lows)), float(max(highs))


def default_family(refinement: int = 2) -> list:
    """Sphere, cube and 2:1 ellipsoid reference bodies."""
    return [make_shape("sphere", 1.0, refinement),
            make_shape("box", (1.0, 1.0, 1.0), refinement),
            make_shape("ellipsoid", (2.0, 1.0, 1.0), refinement)]


@dataclass
class Constants:
    perimeter: tuple = (1.0, 1.0)
    convex: tuple = (1.0, 1.0)

    @classmethod
    def calibrated(cls, medium: ElasticMedium, family=None) -> "Constants":
        family = family if family is not None else default_family()
        data = [f if isinstance(f, ShapeData) else shape_data(f, medium) for f in family]
        return cls(calibrate_constants(data, medium, "perimeter"),
                   calibrate_constants(data, medium, "convex"))


def size_report(centers, capacitances, medium: ElasticMedium, constants: Constants,
                convex: bool = False, reference=None) -> dict:
    """JSON-ready report, one entry per scatterer. ``reference`` optionally
    holds known capacitance matrices whose relative errors are echoed."""
    out = []
    for m, (z, cap) in enumerate(zip(np.asarray(centers), capacitances)):
        cap = cap if isinstance(cap, CapacitanceMatrix) else CapacitanceMatrix(cap)
        warnings = list(cap.warnings)
        entry = {"center": np.asarray(z).tolist(), "capacitance": cap.matrix.tolist(),
                 "eigenvalues": cap.eigenvalues.tolist()}
        if cap.is_positive_definite:
            iv = size_interval(cap, medium, *constants.perimeter)
            entry["acoustic_bracket"] = [iv.acoustic_lower, iv.acoustic_upper]
            entry["perimeter_interval"] = [iv.lower, iv.upper]
            if iv.inverted:
                warnings.append("perimeter interval is inverted")
            if convex:
                entry["convex_bounds"] = dict(zip(("R_i_upper", "R_e_lower"),
                                                  convex_bounds(cap, medium, *constants.convex)))
        else:
            warnings.append("no size estimate: capacitance not positive definite")
        if reference is not None:
            ref = np.asarray(reference[m], dtype=float)
            entry["capacitance_relative_error"] = float(
                np.linalg.norm(cap.matrix - ref) / np.linalg.norm(ref))
        entry["warnings"] = warnings
        out.append(entry)
    return {"constants": {"perimeter": list(constants.perimeter),
                          "convex": list(constants.convex)},
            "scatterers": out}
