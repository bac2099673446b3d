import pytest

from diskturing.diskmesh import distmesh_disk
from diskturing.femsolver import assemble


@pytest.fixture(scope="session")
def coarse_mesh():
    return distmesh_disk(1.0, 0.1)


@pytest.fixture(scope="session")
def coarse_matrices(coarse_mesh):
    return assemble(coarse_mesh)
