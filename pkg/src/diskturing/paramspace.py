"""Partitioning curves and region maps in the (alpha, beta) plane.

For fixed ``alpha`` the discriminant curve ``T^2 = 4D`` becomes a degree-6
polynomial in ``beta`` (``psi``) after clearing the ``alpha + beta``
denominators, and the zero-trace curve ``T = 0`` a cubic (``phi``). Their
positive real roots, swept over ``alpha``, trace the curves. Region maps
classify every grid cell directly from the eigenvalues.

Polynomial coefficients are stored in ascending order (``c[i]`` multiplies
``beta**i``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from diskturing.eigenmodes import ModeIndex, eigenvalue
from diskturing.stability import StabilityClass, classify_arrays, trace_det_arrays

GRID_EPS = 1e-6
POLISH_STEPS = 3


@dataclass(frozen=True)
class SweepConfig:
    gamma: float
    d: float
    mode: ModeIndex
    alpha_max: float = 3.0
    beta_max: float = 3.0
    n_sweep: int = 600
    imag_tol: float = 1e-8
    pos_tol: float = 0.0

    def __post_init__(self) -> None:
        if not (self.alpha_max > 0 and self.beta_max > 0):
            raise ValueError("alpha_max and beta_max must be positive")
        if self.alpha_max <= GRID_EPS or self.beta_max <= GRID_EPS:
            raise ValueError("sweep window must extend beyond the grid epsilon")
        if int(self.n_sweep) != self.n_sweep or self.n_sweep < 2:
            raise ValueError("n_sweep must be an integer >= 2")
        if not (self.imag_tol > 0) or self.pos_tol < 0:
            raise ValueError("imag_tol must be positive and pos_tol non-negative")
        if not (self.gamma > 0 and self.d > 0):
            raise ValueError("gamma and d must be positive")

    @property
    def eta2(self) -> float:
        return eigenvalue(self.mode)

    def alphas(self) -> np.ndarray:
        return np.linspace(GRID_EPS, self.alpha_max, self.n_sweep)

    def betas(self) -> np.ndarray:
        return np.linspace(GRID_EPS, self.beta_max, self.n_sweep)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma, "d": self.d, "mode": self.mode.as_dict(),
            "alpha_max": self.alpha_max, "beta_max": self.beta_max, "n_sweep": self.n_sweep,
            "imag_tol": self.imag_tol, "pos_tol": self.pos_tol,
        }


def _trace_times_sum(alpha: float, gamma: float, d: float, eta2: float) -> np.ndarray:
    """``T * (alpha+beta)`` as a cubic in beta."""
    s = np.array([alpha, 1.0])
    s3 = P.polypow(s, 3)
    num = P.polysub(np.array([-alpha, 1.0]), s3)
    return P.polysub(gamma * num, (d + 1.0) * eta2 * s)


def _det_times_sum(alpha: float, gamma: float, d: float, eta2: float) -> np.ndarray:
    """``D * (alpha+beta)`` as a cubic in beta."""
    s = np.array([alpha, 1.0])
    s2 = P.polypow(s, 2)
    first = P.polysub(gamma * np.array([-alpha, 1.0]), eta2 * s)
    second = P.polysub(-gamma * s2, [d * eta2])
    cross = 2.0 * gamma**2 * P.polymul([0.0, 1.0], s2)
    return P.polyadd(P.polymul(first, second), cross)


def psi_coefficients(alpha: float, gamma: float, d: float, eta2: float) -> np.ndarray:
    """Seven ascending coefficients of ``(T s)^2 - 4 (D s) s`` with ``s = alpha + beta``.

    Obtained by polynomial multiplication of the cubic numerators, so the
    leading coefficient is ``gamma**2``.
    """
    ts = _trace_times_sum(alpha, gamma, d, eta2)
    ds = _det_times_sum(alpha, gamma, d, eta2)
    out = P.polysub(P.polymul(ts, ts), 4.0 * P.polymul(ds, [alpha, 1.0]))
    return _pad(out, 7)


def phi_coefficients(alpha: float, gamma: float, d: float, eta2: float) -> np.ndarray:
    """Four ascending coefficients of ``T (alpha+beta) = 0`` as a cubic in beta."""
    k = (1.0 + d) * eta2
    return np.array([
        -gamma * alpha**3 - alpha * k - gamma * alpha,
        gamma - k - 3.0 * gamma * alpha**2,
        -3.0 * alpha * gamma,
        -gamma,
    ])


def _pad(c: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length)
    out[: len(c)] = c
    return out


def real_positive_roots(coeffs: Sequence[float], imag_tol: float = 1e-8, pos_tol: float = 0.0,
                        polish_steps: int = POLISH_STEPS) -> np.ndarray:
    """Positive real roots of the ascending-order polynomial ``coeffs``.

    All roots come from companion-matrix eigenvalues. A root is kept when
    ``|Im| <= imag_tol * (1 + |root|)`` and ``Re > pos_tol``; kept roots get
    ``polish_steps`` Newton corrections on the original polynomial. Returns a
    sorted array.
    """
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        raise ValueError("all-zero coefficient vector has no well-defined roots")
    keep = np.nonzero(np.abs(c) > 1e-12 * scale)[0]
    c = c[: keep[-1] + 1]
    if c.size < 2:
        return np.empty(0)
    roots = P.polyroots(c)
    mask = (np.abs(roots.imag) <= imag_tol * (1.0 + np.abs(roots))) & (roots.real > pos_tol)
    r = roots.real[mask]
    dc = P.polyder(c)
    for _ in range(polish_steps):
        f = P.polyval(r, c)
        fp = P.polyval(r, dc)
        step = np.where(fp != 0, f / np.where(fp != 0, fp, 1.0), 0.0)
        r = r - step
    return np.sort(r[r > pos_tol])


def discriminant(alpha, beta, gamma: float, d: float, eta2: float):
    T, D = trace_det_arrays(alpha, beta, gamma, d, eta2)
    return T * T - 4.0 * D


@dataclass
class CurveSet:
    """Points on the discriminant curve (psi) and the zero-trace curve (phi)."""

    psi_points: np.ndarray = field(repr=False)
    phi_points: np.ndarray = field(repr=False)
    psi_residuals: np.ndarray = field(repr=False)
    phi_residuals: np.ndarray = field(repr=False)
    beta_intercepts: np.ndarray = field(repr=False)

    def to_csv(self, path) -> Path:
        """Columns ``curve_id, alpha, beta, residual``; rows sorted by (alpha, beta) per curve."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["curve_id", "alpha", "beta", "residual"])
            for cid, pts, res in (("psi", self.psi_points, self.psi_residuals),
                                  ("phi", self.phi_points, self.phi_residuals)):
                for (a, b), r in zip(pts, res):
                    w.writerow([cid, _fmt(a), _fmt(b), _fmt(r)])
        return path


def beta_axis_intercepts(gamma: float, d: float, eta2: float, beta_max: float | None = None) -> np.ndarray:
    """Positive roots of the discriminant curve on the line ``alpha = 0``.

    At ``alpha = 0`` the degree-6 polynomial carries an exact ``beta**2``
    factor, which is removed before solving.
    """
    c = psi_coefficients(0.0, gamma, d, eta2)[2:]
    roots = real_positive_roots(c)
    if beta_max is not None:
        roots = roots[roots <= beta_max]
    return roots


def sweep_curves(cfg: SweepConfig) -> CurveSet:
    """Collect positive real roots of psi and phi at every ``alpha_i`` of the sweep.

    Roots beyond ``beta_max`` are dropped. A phi root is kept only where the
    eigenvalues are complex (``T^2 - 4D < 0``).
    """
    g, d, e2 = cfg.gamma, cfg.d, cfg.eta2
    psi, phi = [], []
    for a in cfg.alphas():
        for b in real_positive_roots(psi_coefficients(a, g, d, e2), cfg.imag_tol, cfg.pos_tol):
            if b <= cfg.beta_max:
                psi.append((a, b))
        for b in real_positive_roots(phi_coefficients(a, g, d, e2), cfg.imag_tol, cfg.pos_tol):
            if b <= cfg.beta_max and discriminant(a, b, g, d, e2) < 0:
                phi.append((a, b))
    psi_pts = np.array(sorted(psi)).reshape(-1, 2)
    phi_pts = np.array(sorted(phi)).reshape(-1, 2)
    return CurveSet(
        psi_points=psi_pts,
        phi_points=phi_pts,
        psi_residuals=psi_residual(psi_pts, g, d, e2),
        phi_residuals=phi_residual(phi_pts, g, d, e2),
        beta_intercepts=beta_axis_intercepts(g, d, e2, cfg.beta_max),
    )


def psi_residual(points: np.ndarray, gamma: float, d: float, eta2: float) -> np.ndarray:
    """``|T^2 - 4D| / (1 + T^2)`` at each point."""
    if len(points) == 0:
        return np.empty(0)
    T, D = trace_det_arrays(points[:, 0], points[:, 1], gamma, d, eta2)
    return np.abs(T * T - 4.0 * D) / (1.0 + T * T)


def phi_residual(points: np.ndarray, gamma: float, d: float, eta2: float) -> np.ndarray:
    """``|T| / (gamma + (d+1) eta2)`` at each point."""
    if len(points) == 0:
        return np.empty(0)
    T, _ = trace_det_arrays(points[:, 0], points[:, 1], gamma, d, eta2)
    return np.abs(T) / (gamma + (d + 1.0) * eta2)


@dataclass
class RegionMap:
    """Per-cell stability class over ``alphas x betas`` (``classes[i, j]`` at ``(alphas[i], betas[j])``)."""

    alphas: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)
    classes: np.ndarray = field(repr=False)
    config: SweepConfig

    def mask(self, cls: StabilityClass) -> np.ndarray:
        return self.classes == cls.code

    def counts(self) -> dict[str, int]:
        return {c.value: int(np.count_nonzero(self.classes == c.code)) for c in StabilityClass}

    def fractions(self) -> dict[str, float]:
        total = self.classes.size
        return {k: v / total for k, v in self.counts().items()}

    def class_at(self, i: int, j: int) -> StabilityClass:
        return StabilityClass.from_code(self.classes[i, j])

    def same_grid(self, other: "RegionMap") -> bool:
        return (self.alphas.shape == other.alphas.shape and self.betas.shape == other.betas.shape
                and np.array_equal(self.alphas, other.alphas) and np.array_equal(self.betas, other.betas))

    def to_csv(self, path) -> Path:
        """Columns ``alpha, beta, class``; one row per cell."""
        path = Path(path)
        names = [c.value for c in StabilityClass]
        with path.open("w", newline="") as fh:
            fh.write("alpha,beta,class\n")
            for i, a in enumerate(self.alphas):
                sa = _fmt(a)
                row = self.classes[i]
                fh.writelines(f"{sa},{_fmt(b)},{names[row[j]]}\n" for j, b in enumerate(self.betas))
        return path

    def summary(self) -> dict:
        return {"config": self.config.as_dict(), "counts": self.counts(), "fractions": self.fractions()}


def classify_region_map(cfg: SweepConfig) -> RegionMap:
    """Classify every grid node of ``[eps, alpha_max] x [eps, beta_max]`` under ``cfg.mode``."""
    a = cfg.alphas()
    b = cfg.betas()
    A, B = np.meshgrid(a, b, indexing="ij")
    classes = classify_arrays(A, B, cfg.gamma, cfg.d, cfg.eta2)
    return RegionMap(alphas=a, betas=b, classes=classes, config=cfg)


@dataclass
class LadderReport:
    """Counts and set relations of per-class cell sets along a ladder of ``d`` values."""

    ds: list[float]
    counts: list[dict[str, int]]
    grows: dict[str, list[bool]]
    shrinks: dict[str, list[bool]]

    def strictly_decreasing(self, cls: StabilityClass) -> bool:
        c = [row[cls.value] for row in self.counts]
        return all(x > y for x, y in zip(c, c[1:]))

    def strictly_increasing(self, cls: StabilityClass) -> bool:
        c = [row[cls.value] for row in self.counts]
        return all(x < y for x, y in zip(c, c[1:]))

    def all_empty(self, cls: StabilityClass) -> bool:
        return all(row[cls.value] == 0 for row in self.counts)

    def nested_growing(self, cls: StabilityClass) -> bool:
        return all(self.grows[cls.value])

    def nested_shrinking(self, cls: StabilityClass) -> bool:
        return all(self.shrinks[cls.value])

    def to_dict(self) -> dict:
        per_d = []
        for i, d in enumerate(self.ds):
            entry = {"d": d, "counts": self.counts[i]}
            if i > 0:
                entry["subset_of_previous"] = {k: v[i - 1] for k, v in self.shrinks.items()}
                entry["superset_of_previous"] = {k: v[i - 1] for k, v in self.grows.items()}
            per_d.append(entry)
        return {
            "per_d": per_d,
            "hopf_strictly_decreasing": self.strictly_decreasing(StabilityClass.HOPF),
            "turing_strictly_increasing": self.strictly_increasing(StabilityClass.TURING),
            "hopf_all_empty": self.all_empty(StabilityClass.HOPF),
            "transcritical_all_empty": self.all_empty(StabilityClass.TRANSCRITICAL),
            "stable_node_nested_growing": self.nested_growing(StabilityClass.STABLE_NODE),
            "turing_nested_growing": self.nested_growing(StabilityClass.TURING),
        }

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path


def table1_relations(maps: Sequence[RegionMap]) -> LadderReport:
    """Compare per-class cell sets of region maps ordered by increasing ``d``.

    ``grows[c][i]`` is true when the class-``c`` set at ladder step ``i`` is
    contained in the set at step ``i+1``; ``shrinks[c][i]`` the reverse.
    """
    if len(maps) < 2:
        raise ValueError("a ladder needs at least two region maps")
    ref = maps[0]
    for m in maps[1:]:
        if not ref.same_grid(m):
            raise ValueError("region maps on a ladder must share the same grid")
        if m.config.mode != ref.config.mode:
            raise ValueError("region maps on a ladder must share the same mode")
    ds = [m.config.d for m in maps]
    grows: dict[str, list[bool]] = {}
    shrinks: dict[str, list[bool]] = {}
    for c in StabilityClass:
        masks = [m.mask(c) for m in maps]
        grows[c.value] = [bool(not np.any(x & ~y)) for x, y in zip(masks, masks[1:])]
        shrinks[c.value] = [bool(not np.any(y & ~x)) for x, y in zip(masks, masks[1:])]
    return LadderReport(ds=ds, counts=[m.counts() for m in maps], grows=grows, shrinks=shrinks)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
