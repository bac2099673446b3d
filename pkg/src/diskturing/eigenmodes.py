"""Neumann eigenmodes of the polar Laplacian on a disk of radius ``rho``.

The radial part is the Frobenius pair ``R = R1 + R2`` with
``R1 = sum_j a_j x^(n+2j)`` and ``R2 = sum_j b_j x^(-n+2j)``, ``x = eta*r``.
The eigenvalue ``eta^2`` is fixed by requiring consecutive terms ``F_j`` and
``F_{j+1}`` of the boundary-derivative series to cancel, with ``j = 2k``.
Orders ``n`` on the half-integer lattice are excluded, and ``r = 0`` is never
evaluated (the ``x^-n`` branch is singular there).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HALF_INT_EPS = 1e-9
DEFAULT_TRUNCATION = 50
# early-stop threshold on the term magnitude, relative to the largest term seen
_TERM_RTOL = 1e-16


class HalfIntegerOrderError(ValueError):
    """Raised when the Bessel order lies on the half-integer lattice."""


class SingularPointError(ValueError):
    """Raised when the radial series is evaluated at r = 0."""


def is_half_integer(n: float, eps: float = HALF_INT_EPS) -> bool:
    """True if ``2n`` is within ``eps`` of an integer."""
    twice = 2.0 * n
    return abs(twice - round(twice)) <= eps


@dataclass(frozen=True)
class ModeIndex:
    """Mode label ``(n, k, rho)``: Bessel order, pair index and disk radius.

    ``k = 0`` is the first pair of series terms ``(j=0, j=1)``; in general the
    pair is ``(2k, 2k+1)``.
    """

    n: float
    k: int
    rho: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.n) or self.n <= 0:
            raise ValueError(f"order n must be a positive finite number, got {self.n!r}")
        if is_half_integer(self.n):
            raise HalfIntegerOrderError(
                f"half-integer order n={self.n!r} is excluded (2n must not be an integer)"
            )
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"pair index k must be a non-negative integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if not self.rho > 0:
            raise ValueError(f"radius rho must be positive, got {self.rho!r}")

    @property
    def eta2(self) -> float:
        return eigenvalue(self)

    def as_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "rho": self.rho}


def eigenvalue(mode: ModeIndex) -> float:
    """Return ``eta^2`` for the ``k``-th cancelling pair.

    ``eta^2 = 4(2k+1)(n+2k+1)(n+4k) / (rho^2 (n+4k+2))``.
    """
    n, k, rho = mode.n, mode.k, mode.rho
    return 4.0 * (2 * k + 1) * (n + 2 * k + 1) * (n + 4 * k) / (rho**2 * (n + 4 * k + 2))


def series_coefficients(mode: ModeIndex, J: int, c0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``a_0..a_J`` and ``b_0..b_J`` of the two Frobenius series.

    ``a_j = (-1)^j c0 / (4^j j! prod_{m=1..j}(n+m))`` and ``b_j`` is the same
    with ``-n`` in place of ``n``.
    """
    if J < 0:
        raise ValueError("truncation J must be non-negative")
    n = mode.n
    a = np.empty(J + 1)
    b = np.empty(J + 1)
    a[0] = b[0] = c0
    for j in range(J):
        a[j + 1] = -a[j] / (4.0 * (j + 1) * (n + j + 1))
        b[j + 1] = -b[j] / (4.0 * (j + 1) * (-n + j + 1))
    return a, b


def radial_value(mode: ModeIndex, r, J: int = DEFAULT_TRUNCATION):
    """Partial sum ``sum_{j<=J} (a_j x^(n+2j) + b_j x^(-n+2j))`` at ``x = eta*r``.

    Accepts a scalar or an array of radii. Summation stops early once every
    remaining term is in the decreasing regime and below ``1e-16`` of the
    largest term seen.

    Raises
    ------
    SingularPointError
        If any ``r <= 0``.
    FloatingPointError
        If a term overflows.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise SingularPointError("radial series is singular at r = 0; evaluate at r > 0 only")
    if J < 0:
        raise ValueError("truncation J must be non-negative")
    n = mode.n
    x = math.sqrt(eigenvalue(mode)) * r_arr
    x2 = x * x
    with np.errstate(over="raise", invalid="raise"):
        ta = x**n
        tb = x ** (-n)
        total = ta + tb
        running = np.maximum(np.abs(ta), np.abs(tb))
        for j in range(J):
            ta = ta * (-x2 / (4.0 * (j + 1) * (n + j + 1)))
            tb = tb * (-x2 / (4.0 * (j + 1) * (-n + j + 1)))
            total = total + ta + tb
            mag = np.maximum(np.abs(ta), np.abs(tb))
            running = np.maximum(running, mag)
            shrinking = (4.0 * (j + 2) * min(n + j + 2, abs(-n + j + 2))) > x2
            if np.all(shrinking & (mag < _TERM_RTOL * running)):
                break
    if not np.all(np.isfinite(total)):
        raise FloatingPointError("non-finite radial series value")
    return float(total) if np.ndim(total) == 0 else total


def boundary_series_terms(mode: ModeIndex, J: int, eta2: float | None = None) -> np.ndarray:
    """Terms ``F_0..F_J`` of the first boundary-derivative series at ``r = rho``.

    ``F_j = a_j (n+2j) x^(n+2j-1)`` with ``x = eta*rho``. ``eta2`` defaults to
    :func:`eigenvalue`; passing another value detunes the boundary condition.
    """
    if eta2 is None:
        eta2 = eigenvalue(mode)
    n = mode.n
    x = math.sqrt(eta2) * mode.rho
    a, _ = series_coefficients(mode, J)
    j = np.arange(J + 1)
    return a * (n + 2 * j) * x ** (n + 2 * j - 1)


def neumann_pair_residual(mode: ModeIndex, eta2: float | None = None, relative: bool = True) -> float:
    """Residual ``F_{2k} + F_{2k+1}`` of the cancelling pair.

    With ``relative=True`` (default) the absolute residual is divided by
    ``max(|F_{2k}|, |F_{2k+1}|)``.
    """
    j = 2 * mode.k
    terms = boundary_series_terms(mode, j + 1, eta2)
    resid = terms[j] + terms[j + 1]
    if not relative:
        return float(resid)
    scale = max(abs(terms[j]), abs(terms[j + 1]))
    return float(abs(resid) / scale)


@dataclass(frozen=True)
class SpectralGrid:
    """Chebyshev points over the full diameter and a periodic Fourier grid."""

    N: int
    M: int
    r_points: np.ndarray = field(repr=False)
    theta_points: np.ndarray = field(repr=False)

    @property
    def angular_step_deg(self) -> float:
        return 360.0 / self.M


def build_grid(N: int, M: int) -> SpectralGrid:
    """Build ``r_i = cos(i pi / N)``, ``i=0..N`` and ``theta_i = 2 i pi / M``, ``i=0..M``.

    ``N`` must be odd (so that no Chebyshev point lands on the centre) and
    ``M`` even.
    """
    if int(N) != N or N < 3 or N % 2 == 0:
        raise ValueError(f"N must be an odd integer >= 3, got {N!r}")
    if int(M) != M or M < 4 or M % 2 == 1:
        raise ValueError(f"M must be an even integer >= 4, got {M!r}")
    N, M = int(N), int(M)
    r = np.cos(np.arange(N + 1) * np.pi / N)
    theta = 2.0 * np.pi * np.arange(M + 1) / M
    r.setflags(write=False)
    theta.setflags(write=False)
    return SpectralGrid(N=N, M=M, r_points=r, theta_points=theta)


@dataclass(frozen=True)
class EigenField:
    """Complex eigenfunction samples on a :class:`SpectralGrid`.

    ``values[i, j]`` is the field at Chebyshev point ``r_points[i]`` (scaled by
    ``rho``) and angle ``theta_points[j]``.
    """

    grid: SpectralGrid
    values: np.ndarray = field(repr=False)
    mode: ModeIndex
    truncation: int

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)

    @property
    def real_sign(self) -> np.ndarray:
        return np.sign(self.values.real).astype(int)

    def to_csv(self, path) -> Path:
        """Write columns ``r, theta, re, im, magnitude, phase``, one row per grid point."""
        path = Path(path)
        rho = self.mode.rho
        mag, ph = self.magnitude, self.phase
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "theta", "re", "im", "magnitude", "phase"])
            for i, ri in enumerate(self.grid.r_points):
                for j, tj in enumerate(self.grid.theta_points):
                    z = self.values[i, j]
                    w.writerow([_fmt(ri * rho), _fmt(tj), _fmt(z.real), _fmt(z.imag),
                                _fmt(mag[i, j]), _fmt(ph[i, j])])
        return path

    def sign_to_csv(self, path) -> Path:
        """Write the nodal sign layer: columns ``r, theta, sign`` (sign of the real part)."""
        path = Path(path)
        sgn = self.real_sign
        rho = self.mode.rho
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "theta", "sign"])
            for i, ri in enumerate(self.grid.r_points):
                for j, tj in enumerate(self.grid.theta_points):
                    w.writerow([_fmt(ri * rho), _fmt(tj), int(sgn[i, j])])
        return path


def eigenfunction_field(mode: ModeIndex, grid: SpectralGrid, J: int = DEFAULT_TRUNCATION) -> EigenField:
    """Evaluate ``w = R(r) exp(i n theta)`` on the grid.

    Chebyshev points with ``r_i < 0`` are read as the point
    ``(|r_i| rho, theta + pi)``.
    """
    r = grid.r_points
    radii = np.abs(r) * mode.rho
    R = radial_value(mode, radii, J)
    flip = np.where(r < 0, np.pi, 0.0)
    theta_eff = grid.theta_points[None, :] + flip[:, None]
    values = R[:, None] * np.exp(1j * mode.n * theta_eff)
    values.setflags(write=False)
    return EigenField(grid=grid, values=values, mode=mode, truncation=J)


def diameter_sign_changes(fld: EigenField, theta_index: int = 0) -> int:
    """Number of sign changes of ``Re w`` along the diameter through ``theta_points[theta_index]``."""
    s = np.sign(fld.values[:, theta_index].real)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
