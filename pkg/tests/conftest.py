import numpy as np
import pytest

from memnet.mesh import assemble_fem, generate_disk_mesh
from memnet.spatial import SpatialIndex


@pytest.fixture(scope="session")
def disk3():
    """384-triangle unit disk (refinement 3) with FEM system and index."""
    mesh = generate_disk_mesh(1.0, 3)
    return mesh, assemble_fem(mesh), SpatialIndex(mesh)


@pytest.fixture(scope="session")
def disk5():
    """6144-triangle unit disk (refinement 5) with FEM system and index."""
    mesh = generate_disk_mesh(1.0, 5)
    return mesh, assemble_fem(mesh), SpatialIndex(mesh)


@pytest.fixture
def rng():
    # fresh per test: draws stay identical regardless of execution order
    return np.random.default_rng(20240817)
