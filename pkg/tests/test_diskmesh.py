import math

import numpy as np
import pytest

from diskturing.diskmesh import (
    TriMesh,
    boundary_edges,
    distmesh_disk,
    mesh_quality,
    signed_distance_disk,
    triangle_quality,
)


@pytest.mark.parametrize("rho,h0", [(1.0, 0.2), (1.0, 0.1), (2.5, 0.3), (1.0, 0.07)])
def test_euler_relation(rho, h0):
    m = distmesh_disk(rho, h0)
    assert m.converged
    assert m.euler_ok()
    assert np.all(m.signed_areas() > 0)


def test_boundary_nodes_on_circle(coarse_mesh):
    r = np.hypot(*coarse_mesh.nodes[coarse_mesh.boundary_mask].T)
    np.testing.assert_allclose(r, 1.0, atol=1e-14)
    assert np.all(signed_distance_disk(coarse_mesh.nodes, 1.0) <= 1e-12)
    bnd = np.unique(boundary_edges(coarse_mesh.triangles))
    assert set(bnd) == set(np.nonzero(coarse_mesh.boundary_mask)[0])


def test_quality_and_area(coarse_mesh):
    qmin, qmean = mesh_quality(coarse_mesh)
    assert qmin >= 0.5 and qmean > 0.9
    assert abs(coarse_mesh.area() - math.pi) < 0.2**2


def test_area_converges():
    errs = [abs(distmesh_disk(1.0, h).area() - math.pi) for h in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_equilateral_quality():
    nodes = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    assert triangle_quality(nodes, np.array([[0, 1, 2]]))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        triangle_quality(nodes, np.array([[0, 2, 1]]))


def test_deterministic_and_roundtrip(tmp_path):
    a = distmesh_disk(1.0, 0.15, seed=4)
    b = distmesh_disk(1.0, 0.15, seed=4)
    pa = a.save(tmp_path / "a.txt")
    pb = b.save(tmp_path / "b.txt")
    assert pa.read_bytes() == pb.read_bytes()
    c = TriMesh.load(pa)
    np.testing.assert_array_equal(c.nodes, a.nodes)
    np.testing.assert_array_equal(c.triangles, a.triangles)
    np.testing.assert_array_equal(c.boundary_mask, a.boundary_mask)
    assert c.rho == pytest.approx(1.0)
    assert pa.read_text().splitlines()[0] == f"nodes {a.n_nodes} triangles {a.n_triangles}"


def test_bad_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("vertices 3\n")
    with pytest.raises(ValueError):
        TriMesh.load(p)


def test_nonconvergence_flagged(caplog):
    m = distmesh_disk(1.0, 0.1, max_iters=3)
    assert not m.converged
    assert "did not converge" in caplog.text
    assert m.euler_ok()


@pytest.mark.parametrize("kw", [dict(h0=0.0), dict(h0=1.5), dict(max_iters=0)])
def test_invalid_arguments(kw):
    with pytest.raises(ValueError):
        distmesh_disk(1.0, **{"h0": 0.1, **kw})
