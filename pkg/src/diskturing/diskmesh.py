"""Uniform triangulation of a disk by the Persson-Strang distmesh iteration.

Bars of a Delaunay triangulation act as compressed springs that push nodes
apart; nodes that leave the disk are projected back onto the circle along
the distance gradient. The triangulation is rebuilt whenever nodes have moved
more than ``0.1 * h0`` since the last rebuild.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

log = logging.getLogger(__name__)

FSCALE = 1.2       # desired bar length over mean bar length
DELTAT = 0.2       # pseudo-time step of the force iteration
TTOL = 0.1         # retriangulation threshold, in units of h0
DPTOL = 1e-3       # convergence threshold on interior node motion, in units of h0
GEPS_FACTOR = 1e-3  # boundary tolerance, in units of h0


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)
    rho: float = 1.0
    h0: float = float("nan")
    converged: bool = True
    iterations: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.boundary_mask))

    def euler_ok(self) -> bool:
        """``#triangles == 2 #nodes - #boundary - 2`` (triangulated disk)."""
        return self.n_triangles == 2 * self.n_nodes - self.n_boundary - 2

    def signed_areas(self) -> np.ndarray:
        return triangle_areas(self.nodes, self.triangles)

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def to_text(self) -> str:
        lines = [f"nodes {self.n_nodes} triangles {self.n_triangles}"]
        lines.extend(f"{_fmt(x)} {_fmt(y)} {int(b)}" for (x, y), b in zip(self.nodes, self.boundary_mask))
        lines.extend(f"{i} {j} {k}" for i, j, k in self.triangles)
        return "\n".join(lines) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def load(cls, path, rho: float | None = None) -> "TriMesh":
        """Read the text format written by :meth:`save`.

        ``rho`` defaults to the largest node radius in the file.
        """
        text = Path(path).read_text().split("\n")
        head = text[0].split()
        if len(head) != 4 or head[0] != "nodes" or head[2] != "triangles":
            raise ValueError(f"{path}: bad mesh header {text[0]!r}")
        nn, nt = int(head[1]), int(head[3])
        xyb = np.array([line.split() for line in text[1:1 + nn]], dtype=float).reshape(nn, 3)
        tri = np.array([line.split() for line in text[1 + nn:1 + nn + nt]], dtype=np.int64).reshape(nt, 3)
        nodes = xyb[:, :2].copy()
        if rho is None:
            rho = float(np.max(np.hypot(nodes[:, 0], nodes[:, 1])))
        return cls(nodes=nodes, triangles=tri, boundary_mask=xyb[:, 2] != 0, rho=rho)


def signed_distance_disk(point, rho: float):
    """``|p| - rho``: negative inside the disk, zero on the circle."""
    p = np.asarray(point, dtype=float)
    return np.hypot(p[..., 0], p[..., 1]) - rho


def triangle_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _initial_points(rho: float, h0: float, rng: np.random.Generator) -> np.ndarray:
    """Equilateral lattice over the bounding box, kept inside the disk.

    The density is uniform, so the rejection step accepts every point inside;
    the random draw is still made so that a non-uniform density would slot in.
    """
    x = np.arange(-rho, rho + h0 * 1e-9, h0)
    y = np.arange(-rho, rho + h0 * 1e-9, h0 * math.sqrt(3) / 2)
    X, Y = np.meshgrid(x, y)
    X[1::2, :] += h0 / 2
    p = np.column_stack([X.ravel(), Y.ravel()])
    p = p[signed_distance_disk(p, rho) < GEPS_FACTOR * h0]
    density = np.ones(len(p))
    keep = rng.random(len(p)) < density / density.max()
    return p[keep]


def _project(p: np.ndarray, rho: float) -> np.ndarray:
    r = np.hypot(p[:, 0], p[:, 1])
    out = r > rho
    p[out] *= (rho / r[out])[:, None]
    return p


def _triangulate(p: np.ndarray, rho: float, geps: float) -> np.ndarray:
    t = Delaunay(p).simplices
    centroid = p[t].mean(axis=1)
    t = t[signed_distance_disk(centroid, rho) < -geps]
    return _orient(p, t)


def _orient(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = t.copy()
    neg = triangle_areas(p, t) < 0
    t[neg] = t[neg][:, [0, 2, 1]]
    return t


def _bars(t: np.ndarray) -> np.ndarray:
    b = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    b.sort(axis=1)
    return np.unique(b, axis=0)


def boundary_edges(t: np.ndarray) -> np.ndarray:
    """Edges that belong to exactly one triangle."""
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return uniq[counts == 1]


def distmesh_disk(rho: float = 1.0, h0: float = 0.05, max_iters: int = 2000, seed: int = 0) -> TriMesh:
    """Triangulate the disk of radius ``rho`` with target edge length ``h0``.

    Iterates until the largest interior node displacement in one step drops
    below ``1e-3 * h0`` or ``max_iters`` is reached (the result then has
    ``converged=False`` and a warning is logged). The returned mesh keeps only
    nodes used by some triangle, orients triangles counter-clockwise and puts
    every node on the triangulation boundary exactly on the circle.
    """
    if not (0 < h0 < rho):
        raise ValueError("need 0 < h0 < rho")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    rng = np.random.default_rng(seed)
    geps = GEPS_FACTOR * h0
    p = _initial_points(rho, h0, rng)
    p_old = np.full_like(p, np.inf)
    t = bars = None
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        if np.max(np.hypot(*(p - p_old).T)) > TTOL * h0:
            p_old = p.copy()
            t = _triangulate(p, rho, geps)
            bars = _bars(t)
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        L = np.hypot(vec[:, 0], vec[:, 1])
        L0 = FSCALE * math.sqrt(np.sum(L**2) / len(L))
        F = np.maximum(L0 - L, 0.0)
        fvec = (F / L)[:, None] * vec
        ftot = np.zeros_like(p)
        np.add.at(ftot, bars[:, 0], fvec)
        np.add.at(ftot, bars[:, 1], -fvec)
        p = p + DELTAT * ftot
        p = _project(p, rho)
        interior = signed_distance_disk(p, rho) < -geps
        move = DELTAT * np.hypot(ftot[interior, 0], ftot[interior, 1])
        if move.size == 0 or move.max() < DPTOL * h0:
            converged = True
            break
    if not converged:
        log.warning("distmesh did not converge in %d iterations (rho=%g, h0=%g)", max_iters, rho, h0)
    return _finalize(p, rho, h0, geps, converged, it)


def _finalize(p: np.ndarray, rho: float, h0: float, geps: float, converged: bool, iterations: int) -> TriMesh:
    t = _triangulate(p, rho, geps)
    used = np.unique(t)
    remap = np.full(len(p), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    p = p[used]
    t = remap[t]
    bnd = np.zeros(len(p), dtype=bool)
    bnd[boundary_edges(t).ravel()] = True
    r = np.hypot(p[bnd, 0], p[bnd, 1])
    p[bnd] *= (rho / r)[:, None]
    t = _orient(p, t)
    return TriMesh(nodes=p, triangles=t.astype(np.int64), boundary_mask=bnd, rho=rho, h0=h0,
                   converged=converged, iterations=iterations)


def triangle_quality(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """``2 r_in / r_circ`` per triangle (1 for equilateral).

    Raises ``ValueError`` on a triangle with non-positive signed area.
    """
    area = triangle_areas(nodes, tris)
    if np.any(area <= 0):
        raise ValueError("degenerate or inverted triangle")
    p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    a = np.linalg.norm(p1 - p2, axis=1)
    b = np.linalg.norm(p2 - p0, axis=1)
    c = np.linalg.norm(p0 - p1, axis=1)
    return (b + c - a) * (c + a - b) * (a + b - c) / (a * b * c)


def mesh_quality(mesh: TriMesh) -> tuple[float, float]:
    q = triangle_quality(mesh.nodes, mesh.triangles)
    return float(q.min()), float(q.mean())


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
