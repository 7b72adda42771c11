import numpy as np
import pytest

import meshgen
from shapecorr.spectral import eigendecompose


@pytest.fixture(scope="session")
def ico():
    return meshgen.icosahedron()


@pytest.fixture(scope="session")
def ico_basis_full(ico):
    return eigendecompose(ico.stiffness, ico.mass, ico.n_vertices)


@pytest.fixture(scope="session")
def sphere():
    return meshgen.icosphere(2)  # 162 vertices


@pytest.fixture(scope="session")
def sphere_basis(sphere):
    return eigendecompose(sphere.stiffness, sphere.mass, 40)


@pytest.fixture(scope="session")
def bumpy():
    return meshgen.bumpy_sphere(2)  # 162 vertices, simple spectrum


@pytest.fixture(scope="session")
def bumpy_basis(bumpy):
    return eigendecompose(bumpy.stiffness, bumpy.mass, 30)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(7)
