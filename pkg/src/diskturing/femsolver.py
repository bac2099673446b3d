"""P1 finite elements with first-order implicit-explicit time stepping.

The kinetics are ``f = alpha - u + u^2 v`` and ``g = beta - u^2 v``. Two
first-order schemes are available, both implicit in diffusion.

``"semi"`` (default) also treats the linear decay of ``u`` and the
consumption ``u^2 v`` of ``v`` implicitly, with ``u^2`` lagged::

    (M + dt K + dt gamma M)           u_new = M u + dt gamma M (alpha + u^2 v)
    (M + dt d K + dt gamma diag(m u^2)) v_new = M v + dt gamma beta m

where ``m`` holds the row sums of ``M``. ``"imex"`` keeps the whole reaction
explicit::

    (M + dt K)   u_new = M u + dt gamma M f(u, v)
    (M + dt d K) v_new = M v + dt gamma M g(u, v)

The fully explicit reaction is unstable at ``dt = 1e-3`` once
``dt * gamma * (alpha+beta)^2`` exceeds about 2, which the stable parameter
set does. Homogeneous Neumann conditions are natural in the weak form, so no
boundary terms appear.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.signal import argrelmax
from scipy.sparse.linalg import cg, factorized

from diskturing.diskmesh import TriMesh, triangle_areas
from diskturing.stability import ReactionParams, steady_state

log = logging.getLogger(__name__)

SCHEMES = ("semi", "imex")
CG_RTOL = 1e-10


class SimulationError(RuntimeError):
    """Non-finite field or failed solve; ``state`` holds the last good state."""

    def __init__(self, msg: str, state: "SimState"):
        super().__init__(msg)
        self.state = state


@dataclass(frozen=True)
class SimConfig:
    params: ReactionParams
    t_end: float
    dt: float = 1e-3
    threshold: float = 5e-4
    snapshot_times: tuple[float, ...] = ()
    lumped: bool = False
    stop_on_threshold: bool = True
    min_time: float = 0.0
    scheme: str = "semi"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        object.__setattr__(self, "snapshot_times", tuple(sorted(float(t) for t in self.snapshot_times)))

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(), "t_end": self.t_end, "dt": self.dt,
            "threshold": self.threshold, "snapshot_times": list(self.snapshot_times),
            "lumped": self.lumped, "stop_on_threshold": self.stop_on_threshold,
            "min_time": self.min_time, "scheme": self.scheme,
        }


@dataclass
class SimState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    steps: int = 0
    series_t: list[float] = field(default_factory=list)
    series_du: list[float] = field(default_factory=list)
    series_dv: list[float] = field(default_factory=list)

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.v.copy(), self.t, self.steps,
                        list(self.series_t), list(self.series_du), list(self.series_dv))

    def series(self) -> np.ndarray:
        """``(n, 3)`` array of ``t, |du/dt|_M, |dv/dt|_M``."""
        return np.column_stack([self.series_t, self.series_du, self.series_dv]).reshape(-1, 3)


def initial_conditions(mesh: TriMesh, p: ReactionParams, random_amplitude: float = 0.0,
                       seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Steady state plus the deterministic cosine perturbation.

    ``0.0016 cos(2 pi (x+y)) + 0.01 sum_{i=1..8} cos(i pi x)`` is added to both
    species. ``random_amplitude > 0`` adds an extra seeded uniform
    perturbation in ``[-a, a]`` (off by default).
    """
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    pert = 0.0016 * np.cos(2 * np.pi * (x + y))
    pert = pert + 0.01 * sum(np.cos(i * np.pi * x) for i in range(1, 9))
    us, vs = steady_state(p)
    u0 = us + pert
    v0 = vs + pert
    if random_amplitude > 0:
        rng = np.random.default_rng(seed)
        u0 = u0 + rng.uniform(-random_amplitude, random_amplitude, len(x))
        v0 = v0 + rng.uniform(-random_amplitude, random_amplitude, len(x))
    return u0, v0


def assemble(mesh: TriMesh, lumped: bool = False) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Mass and stiffness matrices of continuous P1 elements.

    The consistent element mass is ``A/12 * (1 + delta_ij)``; with
    ``lumped=True`` row sums are moved to the diagonal.
    """
    nodes, tris = mesh.nodes, mesh.triangles
    area = triangle_areas(nodes, tris)
    if np.any(area <= 0):
        raise ValueError("degenerate or inverted triangle in mesh")
    p = nodes[tris]                               # (T, 3, 2)
    # gradients of barycentric coordinates: rotate the opposite edge
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grad = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area)[:, None, None]
    ke = area[:, None, None] * np.einsum("tik,tjk->tij", grad, grad)
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = len(nodes)
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    if lumped:
        M = sp.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()
    return M, K


def m_norm(M: sp.spmatrix, w: np.ndarray) -> float:
    """``sqrt(w^T M w)``; overflow gives ``inf``."""
    with np.errstate(over="ignore", invalid="ignore"):
        q = float(w @ (M @ w))
    return math.sqrt(q) if q > 0 else (math.inf if math.isnan(q) else 0.0)


class Stepper:
    """System matrices for one mesh, ``dt``, ``d`` and ``gamma``.

    Constant matrices are factorised once. The ``"semi"`` scheme's
    ``v``-system changes every step and is solved by Jacobi-preconditioned
    conjugate gradients to ``CG_RTOL`` relative residual.
    """

    def __init__(self, M: sp.spmatrix, K: sp.spmatrix, dt: float, d: float,
                 gamma: float = 0.0, scheme: str = "imex"):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        self.M = M.tocsc()
        self.dt = dt
        self.gamma = gamma
        self.scheme = scheme
        self.m = np.asarray(M.sum(axis=1)).ravel()
        if scheme == "imex":
            self.solve_u = factorized((M + dt * K).tocsc())
            self.solve_v = factorized((M + dt * d * K).tocsc())
        else:
            self.solve_u = factorized(((1.0 + dt * gamma) * M + dt * K).tocsc())
            self.B = (M + dt * d * K).tocsr()
            self.B_diag = self.B.diagonal()
            # with gamma = 0 the v-system is constant, so factorise it once
            self.solve_v = factorized(self.B.tocsc()) if gamma == 0 else None

    def solve_v_semi(self, u: np.ndarray, rhs: np.ndarray, guess: np.ndarray) -> np.ndarray:
        if self.solve_v is not None:
            return self.solve_v(rhs)
        w = self.dt * self.gamma * self.m * u * u
        A = self.B + sp.diags(w)
        P = sp.diags(1.0 / (self.B_diag + w))
        x, info = cg(A, rhs, x0=guess, rtol=CG_RTOL, atol=0.0, M=P, maxiter=10 * len(rhs))
        if info != 0:
            raise np.linalg.LinAlgError(f"conjugate gradients did not converge (info={info})")
        return x

    def __call__(self, state: SimState, p: ReactionParams) -> SimState:
        return step(state, p, self)


def _advance(u: np.ndarray, v: np.ndarray, p: ReactionParams, stepper: Stepper) -> tuple[np.ndarray, np.ndarray]:
    dt, M = stepper.dt, stepper.M
    u2 = u * u
    if stepper.scheme == "imex":
        u2v = u2 * v
        u_new = stepper.solve_u(M @ (u + dt * p.gamma * (p.alpha - u + u2v)))
        v_new = stepper.solve_v(M @ (v + dt * p.gamma * (p.beta - u2v)))
        return u_new, v_new
    if p.gamma != stepper.gamma:
        raise ValueError("params.gamma differs from the gamma the stepper was built with")
    u_new = stepper.solve_u(M @ (u + dt * p.gamma * (p.alpha + u2 * v)))
    v_new = stepper.solve_v_semi(u, M @ v + dt * p.gamma * p.beta * stepper.m, v)
    return u_new, v_new


def step(state: SimState, p: ReactionParams, stepper: Stepper) -> SimState:
    """Advance one step and append the M-norm time-derivative norms."""
    u, v = state.u, state.v
    dt = stepper.dt
    M = stepper.M
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            u_new, v_new = _advance(u, v, p, stepper)
    except (np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
        raise SimulationError(f"linear solve failed at t={state.t + dt:.6g}: {exc}", state.copy()) from exc
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise SimulationError(f"non-finite field at t={state.t + dt:.6g}", state.copy())
    du = m_norm(M, u_new - u) / dt
    dv = m_norm(M, v_new - v) / dt
    new = SimState(u_new, v_new, state.t + dt, state.steps + 1,
                   state.series_t, state.series_du, state.series_dv)
    new.series_t.append(new.t)
    new.series_du.append(du)
    new.series_dv.append(dv)
    return new


@dataclass
class SimResult:
    state: SimState
    snapshots: dict[float, tuple[np.ndarray, np.ndarray]]
    reason: str
    wall_seconds: float
    config: SimConfig

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    def summary(self) -> dict:
        s = self.state
        return {
            "config": self.config.as_dict(),
            "termination": self.reason,
            "t_final": s.t,
            "steps": s.steps,
            "final_du_norm": s.series_du[-1] if s.series_du else None,
            "final_dv_norm": s.series_dv[-1] if s.series_dv else None,
            "u_mean": float(np.mean(s.u)), "v_mean": float(np.mean(s.v)),
            "u_std": float(np.std(s.u)), "v_std": float(np.std(s.v)),
            "u_min": float(np.min(s.u)), "v_min": float(np.min(s.v)),
            "positive": bool(np.all(s.u > 0) and np.all(s.v > 0)),
            "wall_seconds": self.wall_seconds,
        }


def simulate(mesh: TriMesh, cfg: SimConfig, state: SimState | None = None,
             progress: Callable[[SimState], None] | None = None) -> SimResult:
    """Step until ``t >= t_end`` or both derivative norms fall below the threshold.

    Threshold stopping only applies after ``cfg.min_time`` and when
    ``cfg.stop_on_threshold`` is set. Snapshots are taken at the first step
    with ``t >= t_snap``.
    """
    start = time.perf_counter()
    M, K = assemble(mesh, cfg.lumped)
    stepper = Stepper(M, K, cfg.dt, cfg.params.d, cfg.params.gamma, cfg.scheme)
    if state is None:
        u0, v0 = initial_conditions(mesh, cfg.params)
        state = SimState(u0, v0)
    pending = list(cfg.snapshot_times)
    snaps: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    n_steps = int(math.ceil(cfg.t_end / cfg.dt - 1e-9))
    reason = "t_end"
    # take pending snapshots that are due at the initial time
    while pending and pending[0] <= state.t + 1e-12:
        snaps[pending.pop(0)] = (state.u.copy(), state.v.copy())
    for _ in range(n_steps - state.steps):
        state = step(state, cfg.params, stepper)
        while pending and state.t >= pending[0] - 1e-9:
            snaps[pending.pop(0)] = (state.u.copy(), state.v.copy())
        if progress is not None and state.steps % 1000 == 0:
            progress(state)
        if (cfg.stop_on_threshold and state.t >= cfg.min_time
                and state.series_du[-1] < cfg.threshold and state.series_dv[-1] < cfg.threshold):
            reason = "converged"
            break
    return SimResult(state, snaps, reason, time.perf_counter() - start, cfg)


@dataclass(frozen=True)
class OscillationMetrics:
    peak_times: np.ndarray
    peak_values: np.ndarray
    intervals: np.ndarray
    ratios: np.ndarray

    @property
    def n_peaks(self) -> int:
        return len(self.peak_times)

    def to_dict(self) -> dict:
        return {"peak_times": self.peak_times.tolist(), "peak_values": self.peak_values.tolist(),
                "intervals": self.intervals.tolist(), "ratios": self.ratios.tolist()}


def oscillation_metrics(times: Sequence[float], values: Sequence[float]) -> OscillationMetrics:
    """Peaks of a derivative-norm series and the spacing between them.

    A peak is the largest local maximum inside each contiguous excursion of
    the series above twice its median, so the fast carrier oscillation within
    one burst counts once. Returns peak times, successive intervals and
    ratios of successive intervals.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) < 3:
        raise ValueError("series must contain at least 3 samples")
    level = 2.0 * np.median(y)
    above = y > level
    maxima = set(argrelmax(y)[0].tolist())
    peaks = []
    i = 0
    while i < len(y):
        if not above[i]:
            i += 1
            continue
        j = i
        while j < len(y) and above[j]:
            j += 1
        cand = [k for k in range(i, j) if k in maxima]
        if cand:
            peaks.append(max(cand, key=lambda k: y[k]))
        i = j
    idx = np.array(peaks, dtype=int)
    pt = t[idx]
    intervals = np.diff(pt)
    ratios = intervals[1:] / intervals[:-1] if len(intervals) > 1 else np.empty(0)
    return OscillationMetrics(pt, y[idx], intervals, ratios)


def write_snapshot(path, mesh: TriMesh, u: np.ndarray, v: np.ndarray) -> Path:
    """Columns ``node_id, x, y, u, v``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "y", "u", "v"])
        for i, ((x, y), a, b) in enumerate(zip(mesh.nodes, u, v)):
            w.writerow([i, _fmt(x), _fmt(y), _fmt(a), _fmt(b)])
    return path


def write_diagnostics(path, state: SimState) -> Path:
    """Columns ``t, du_norm, dv_norm``, one row per step."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("t,du_norm,dv_norm\n")
        fh.writelines(f"{_fmt(t)},{_fmt(a)},{_fmt(b)}\n"
                      for t, a, b in zip(state.series_t, state.series_du, state.series_dv))
    return path


def write_summary(path, result: SimResult, extra: dict | None = None) -> Path:
    path = Path(path)
    data = result.summary()
    if extra:
        data.update(extra)
    path.write_text(json.dumps(data, indent=2))
    return path


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
