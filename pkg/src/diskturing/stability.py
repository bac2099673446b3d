"""Linear stability of the uniform steady state under a single Laplacian mode.

The stability matrix is the kinetic Jacobian at ``(u_s, v_s)`` scaled by
``gamma`` minus ``eta^2 * diag(1, d)``. Its characteristic polynomial is
``sigma^2 - T sigma + D``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from diskturing.eigenmodes import ModeIndex, eigenvalue, is_half_integer


class StabilityClass(str, enum.Enum):
    STABLE_NODE = "STABLE_NODE"
    STABLE_SPIRAL = "STABLE_SPIRAL"
    TURING = "TURING"
    HOPF = "HOPF"
    TRANSCRITICAL = "TRANSCRITICAL"
    DEGENERATE_REPEATED = "DEGENERATE_REPEATED"

    @property
    def code(self) -> int:
        return _CLASS_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "StabilityClass":
        return _CODE_CLASSES[int(code)]


_CLASS_CODES = {c: i for i, c in enumerate(StabilityClass)}
_CODE_CLASSES = {i: c for c, i in _CLASS_CODES.items()}

# relative size of |T^2 - 4D| that counts as a repeated root
REPEATED_RTOL = 1e-10


@dataclass(frozen=True)
class ReactionParams:
    """Kinetic constants: feed rates ``alpha``, ``beta``, scaling ``gamma``, diffusion ratio ``d``."""

    alpha: float
    beta: float
    gamma: float = 1.0
    d: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not self.alpha + self.beta > 0:
            raise ValueError("alpha + beta must be positive for the steady state to exist")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if not self.d > 0:
            raise ValueError("d must be positive")

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "d": self.d}


def steady_state(p: ReactionParams) -> tuple[float, float]:
    s = p.alpha + p.beta
    return s, p.beta / s**2


def stability_matrix(p: ReactionParams, eta2: float) -> np.ndarray:
    a, b, g, d = p.alpha, p.beta, p.gamma, p.d
    s = a + b
    return np.array(
        [
            [g * (b - a) / s - eta2, g * s**2],
            [-2.0 * g * b / s, -g * s**2 - d * eta2],
        ]
    )


def trace_det(p: ReactionParams, eta2: float) -> tuple[float, float]:
    """Closed-form trace and determinant of :func:`stability_matrix`.

    The determinant carries ``d * eta2`` in the second diagonal factor, as the
    matrix does.
    """
    return trace_det_arrays(p.alpha, p.beta, p.gamma, p.d, eta2)


def trace_det_arrays(alpha, beta, gamma, d, eta2):
    """Vectorised :func:`trace_det` over broadcastable ``alpha``, ``beta``."""
    s = alpha + beta
    T = gamma * (beta - alpha - s**3) / s - (d + 1.0) * eta2
    D = (gamma * (beta - alpha) / s - eta2) * (-gamma * s**2 - d * eta2) + 2.0 * gamma**2 * beta * s
    return T, D


def eigen_pair(T: float, D: float) -> tuple[complex, complex]:
    """Roots of ``sigma^2 - T sigma + D = 0``, larger real part first.

    Real roots are formed without cancellation (``q`` then ``D/q``).
    """
    disc = T * T - 4.0 * D
    if disc >= 0:
        sq = math.sqrt(disc)
        q = 0.5 * (T + math.copysign(sq, T))
        if q == 0.0:
            return complex(0.0), complex(0.0)
        r1, r2 = q, D / q
        hi, lo = (r1, r2) if r1 >= r2 else (r2, r1)
        return complex(hi), complex(lo)
    half_im = 0.5 * math.sqrt(-disc)
    return complex(0.5 * T, half_im), complex(0.5 * T, -half_im)


def default_tol_re(T: float) -> float:
    return 1e-6 * max(1.0, abs(T))


@dataclass(frozen=True)
class StabilityReport:
    trace: float
    det: float
    discriminant: float
    sigma1: complex
    sigma2: complex
    stability_class: StabilityClass
    repeated: bool
    mode: ModeIndex | None = None
    eta2: float = field(default=float("nan"))

    @property
    def max_real(self) -> float:
        return max(self.sigma1.real, self.sigma2.real)

    def to_dict(self) -> dict:
        return {
            "trace": self.trace,
            "det": self.det,
            "discriminant": self.discriminant,
            "sigma1": [self.sigma1.real, self.sigma1.imag],
            "sigma2": [self.sigma2.real, self.sigma2.imag],
            "class": self.stability_class.value,
            "repeated": self.repeated,
            "eta2": self.eta2,
            "mode": None if self.mode is None else self.mode.as_dict(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _classify(T: float, D: float, s1: complex, s2: complex, tol_re: float | None) -> tuple[StabilityClass, bool]:
    disc = T * T - 4.0 * D
    repeated = abs(disc) <= REPEATED_RTOL * max(1.0, T * T, 4.0 * abs(D))
    if disc >= 0:
        if max(s1.real, s2.real) > 0:
            return StabilityClass.TURING, repeated
        return StabilityClass.STABLE_NODE, repeated
    tol = default_tol_re(T) if tol_re is None else tol_re
    re = 0.5 * T
    if re < -tol:
        return StabilityClass.STABLE_SPIRAL, repeated
    if re > tol:
        return StabilityClass.HOPF, repeated
    return StabilityClass.TRANSCRITICAL, repeated


def classify_eta2(p: ReactionParams, eta2: float, tol_re: float | None = None,
                  mode: ModeIndex | None = None) -> StabilityReport:
    """Classify the steady state against a given Laplacian eigenvalue ``eta2``."""
    T, D = trace_det(p, eta2)
    s1, s2 = eigen_pair(T, D)
    cls, repeated = _classify(T, D, s1, s2, tol_re)
    return StabilityReport(
        trace=T, det=D, discriminant=T * T - 4.0 * D, sigma1=s1, sigma2=s2,
        stability_class=cls, repeated=repeated, mode=mode, eta2=eta2,
    )


def classify_point(p: ReactionParams, mode: ModeIndex, tol_re: float | None = None) -> StabilityReport:
    """Classify ``p`` under the Laplacian mode ``mode``.

    Real pair: both negative gives STABLE_NODE, any positive root gives
    TURING. Complex pair: ``Re sigma`` below ``-tol_re`` is STABLE_SPIRAL,
    above ``tol_re`` is HOPF, otherwise TRANSCRITICAL. ``tol_re`` defaults to
    ``1e-6 * max(1, |T|)``. A vanishing discriminant sets ``repeated``.
    """
    return classify_eta2(p, eigenvalue(mode), tol_re, mode)


def classify_arrays(alpha, beta, gamma: float, d: float, eta2: float, tol_re: float | None = None) -> np.ndarray:
    """Vectorised classification; returns :attr:`StabilityClass.code` per entry.

    Uses the same rules as :func:`classify_point`.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    T, D = trace_det_arrays(alpha, beta, gamma, d, eta2)
    disc = T * T - 4.0 * D
    real = disc >= 0
    sq = np.sqrt(np.where(real, disc, 0.0))
    q = 0.5 * (T + np.copysign(sq, T))
    with np.errstate(divide="ignore", invalid="ignore"):
        other = np.where(q != 0, D / q, 0.0)
    smax = np.maximum(q, other)
    tol = 1e-6 * np.maximum(1.0, np.abs(T)) if tol_re is None else tol_re
    re = 0.5 * T
    out = np.empty(np.shape(T), dtype=np.int8)
    out[real & (smax > 0)] = StabilityClass.TURING.code
    out[real & ~(smax > 0)] = StabilityClass.STABLE_NODE.code
    cplx = ~real
    out[cplx & (re < -tol)] = StabilityClass.STABLE_SPIRAL.code
    out[cplx & (re > tol)] = StabilityClass.HOPF.code
    out[cplx & (np.abs(re) <= tol)] = StabilityClass.TRANSCRITICAL.code
    return out


@dataclass(frozen=True)
class ModeScan:
    reports: list[StabilityReport]
    aggregate: StabilityClass
    dominant_k: int

    def to_dict(self) -> dict:
        return {
            "aggregate": self.aggregate.value,
            "dominant_k": self.dominant_k,
            "reports": [r.to_dict() for r in self.reports],
        }


def classify_over_modes(p: ReactionParams, n: float, rho: float, k_max: int,
                        tol_re: float | None = None) -> ModeScan:
    """Classify ``p`` for every ``k = 0..k_max`` and report the dominant mode.

    The dominant mode maximises ``max(Re sigma1, Re sigma2)``; ties go to the
    smaller ``k``.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    reports = [classify_point(p, ModeIndex(n, k, rho), tol_re) for k in range(k_max + 1)]
    best = 0
    for k, rep in enumerate(reports):
        if rep.max_real > reports[best].max_real:
            best = k
    return ModeScan(reports=reports, aggregate=reports[best].stability_class, dominant_k=best)


def radius_bound(d: float, gamma: float, n: float, k: int) -> float:
    """Critical radius ``rho* = 2 sqrt((d+1)(2k+1)(n+2k+1)(n+4k) / (gamma (n+4k+2)))``.

    ``rho >= rho*`` is necessary for Hopf or transcritical behaviour in mode
    ``k``; for ``rho < rho*`` complex eigenvalue pairs always have negative
    real part, so any instability is of Turing type.
    """
    if not (d > 0 and gamma > 0 and n > 0):
        raise ValueError("d, gamma and n must be positive")
    if int(k) != k or k < 0:
        raise ValueError("k must be a non-negative integer")
    if is_half_integer(n):
        raise ValueError(f"half-integer order n={n!r} is excluded")
    return 2.0 * math.sqrt((d + 1) * (2 * k + 1) * (n + 2 * k + 1) * (n + 4 * k) / (gamma * (n + 4 * k + 2)))


class RadiusRegime(str, enum.Enum):
    TURING_ONLY = "TURING_ONLY"          # rho < rho*
    TEMPORAL_ADMISSIBLE = "TEMPORAL_ADMISSIBLE"  # rho >= rho*


def radius_regime(d: float, gamma: float, rho: float, n: float, k: int) -> RadiusRegime:
    if rho < radius_bound(d, gamma, n, k):
        return RadiusRegime.TURING_ONLY
    return RadiusRegime.TEMPORAL_ADMISSIBLE


def repeated_root_value(p: ReactionParams, mode: ModeIndex) -> float:
    """``T / 2``: the double root when ``(alpha, beta)`` lies on the discriminant curve."""
    T, _ = trace_det(p, eigenvalue(mode))
    return 0.5 * T


def kinetic_sign_margin(p: ReactionParams) -> float:
    """``beta - alpha - (alpha+beta)^3``; a positive repeated root needs this to be positive."""
    return p.beta - p.alpha - (p.alpha + p.beta) ** 3

