import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

import meshgen
from shapecorr.errors import DimensionError
from shapecorr.spectral import (
    basis_cache_path,
    eigendecompose,
    heat_kernel_rows,
    heat_operator,
    project,
    read_basis_cache,
    reconstruct,
    write_basis_cache,
)


def test_constant_mode(sphere_basis, sphere):
    phi1 = sphere_basis.eigenfunctions[:, 0]
    expected = 1.0 / np.sqrt(sphere.area)
    assert_allclose(np.abs(phi1), expected, rtol=1e-8)
    assert abs(sphere_basis.eigenvalues[0]) <= 1e-6


def test_orthonormality(sphere_basis):
    phi = sphere_basis.eigenfunctions
    gram = phi.T @ (sphere_basis.mass[:, None] * phi)
    assert np.abs(gram - np.eye(sphere_basis.k)).max() <= 1e-8


def test_eigenvalues_sorted_nonnegative(sphere_basis):
    lam = sphere_basis.eigenvalues
    assert (np.diff(lam) >= -1e-12).all()
    assert lam.min() >= -1e-9


def test_dense_generalized_oracle(ico, ico_basis_full):
    # independent oracle: generalized solver on the (L, A) pencil directly
    L = ico.stiffness.toarray()
    A = np.diag(ico.mass)
    lam_oracle = scipy.linalg.eigh(L, A, eigvals_only=True)
    lam = ico_basis_full.eigenvalues
    scale = np.abs(lam_oracle).max()
    assert_allclose(lam, lam_oracle, rtol=1e-8, atol=1e-8 * scale)


def test_iterative_matches_dense(sphere):
    dense = eigendecompose(sphere.stiffness, sphere.mass, 25, method="dense")
    it = eigendecompose(sphere.stiffness, sphere.mass, 25, method="iterative")
    scale = np.abs(dense.eigenvalues).max()
    assert_allclose(it.eigenvalues, dense.eigenvalues, rtol=1e-8, atol=1e-8 * scale)


def test_sign_fix_deterministic(sphere):
    b1 = eigendecompose(sphere.stiffness, sphere.mass, 20)
    b2 = eigendecompose(sphere.stiffness, sphere.mass, 20)
    assert np.array_equal(b1.eigenfunctions, b2.eigenfunctions)


def test_k_out_of_range(ico):
    with pytest.raises(DimensionError):
        eigendecompose(ico.stiffness, ico.mass, ico.n_vertices + 1)


# ----------------------------------------------------------------------
# projection / reconstruction
# ----------------------------------------------------------------------


def test_project_eigenfunction(sphere_basis):
    coeffs = project(sphere_basis, sphere_basis.eigenfunctions[:, 2])
    expected = np.zeros(sphere_basis.k)
    expected[2] = 1.0
    assert np.abs(coeffs - expected).max() <= 1e-8


def test_project_zero(sphere_basis):
    assert_allclose(project(sphere_basis, np.zeros(sphere_basis.n)), 0.0)


def test_project_dimension_error(sphere_basis):
    with pytest.raises(DimensionError):
        project(sphere_basis, np.zeros(sphere_basis.n + 1))


def test_roundtrip_full_rank(ico, ico_basis_full, rng):
    f = rng.standard_normal(ico.n_vertices)
    back = reconstruct(ico_basis_full, project(ico_basis_full, f))
    assert np.abs(back - f).max() <= 1e-8


def test_reconstruct_first_mode_constant(sphere_basis, sphere):
    e1 = np.zeros(sphere_basis.k)
    e1[0] = 1.0
    values = reconstruct(sphere_basis, e1)
    assert_allclose(np.abs(values), 1.0 / np.sqrt(sphere.area), rtol=1e-8)
    assert np.abs(values - values[0]).max() <= 1e-10


def test_reconstruct_linearity(sphere_basis, rng):
    c1 = rng.standard_normal(sphere_basis.k)
    c2 = rng.standard_normal(sphere_basis.k)
    lhs = reconstruct(sphere_basis, 2.0 * c1 - 3.0 * c2)
    rhs = 2.0 * reconstruct(sphere_basis, c1) - 3.0 * reconstruct(sphere_basis, c2)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_truncation_error_monotone(ico, ico_basis_full, rng):
    # heat-smoothed field: residual energy shrinks as more modes are kept
    f = rng.standard_normal(ico.n_vertices)
    t = 1.0 / ico_basis_full.eigenvalues[1]
    coeffs = project(ico_basis_full, f) * np.exp(-ico_basis_full.eigenvalues * t)
    u = reconstruct(ico_basis_full, coeffs)
    residuals = []
    for kp in range(1, ico_basis_full.k + 1):
        part = ico_basis_full.truncated(kp)
        r = u - reconstruct(part, project(part, u))
        residuals.append(np.sqrt(np.sum(ico_basis_full.mass * r ** 2)))
    assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] <= 1e-10
    assert residuals[0] > residuals[-2] > 0  # genuinely decreasing en route


def test_parseval_full_rank(ico, ico_basis_full, rng):
    f = rng.standard_normal(ico.n_vertices)
    energy_vertex = float(np.sum(ico_basis_full.mass * f ** 2))
    energy_coeff = float(np.sum(project(ico_basis_full, f) ** 2))
    assert_allclose(energy_coeff, energy_vertex, rtol=1e-8)


# ----------------------------------------------------------------------
# heat kernels
# ----------------------------------------------------------------------


def test_heat_identity_at_zero(sphere_basis):
    assert np.array_equal(heat_operator(sphere_basis, 0.0), np.eye(sphere_basis.k))


def test_heat_entries_positive_nonincreasing(sphere_basis):
    h = np.diag(heat_operator(sphere_basis, 0.37))
    assert (h > 0).all()
    assert (np.diff(h) <= 1e-15).all()


def test_heat_paper_operating_point(sphere_basis):
    h = heat_operator(sphere_basis, 1e-3)
    assert_allclose(np.diag(h), np.exp(-sphere_basis.eigenvalues * 1e-3), rtol=0)
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0


def test_heat_semigroup(sphere_basis):
    h1 = heat_operator(sphere_basis, 0.2)
    h2 = heat_operator(sphere_basis, 0.5)
    h12 = heat_operator(sphere_basis, 0.7)
    assert_allclose(h1 @ h2, h12, rtol=1e-13, atol=0)


def test_heat_rows_conservation(ico, ico_basis_full):
    H = heat_kernel_rows(ico_basis_full, 0.05, np.arange(ico.n_vertices))
    integrals = H @ ico_basis_full.mass
    assert np.abs(integrals - 1.0).max() <= 1e-6


def test_heat_rows_long_time_limit(ico, ico_basis_full):
    t = 1e3 / ico_basis_full.eigenvalues[1]
    H = heat_kernel_rows(ico_basis_full, t, [0])
    assert np.abs(H - 1.0 / ico.area).max() <= 1e-6


def test_heat_rows_symmetry(ico, ico_basis_full):
    H = heat_kernel_rows(ico_basis_full, 0.1, np.arange(ico.n_vertices))
    assert np.abs(H - H.T).max() <= 1e-12


def test_heat_kernel_positive_definite(ico, ico_basis_full, rng):
    H = heat_kernel_rows(ico_basis_full, 0.05, np.arange(ico.n_vertices))
    for _ in range(100):
        x = rng.standard_normal(ico.n_vertices)
        assert x @ H @ x > 0


# ----------------------------------------------------------------------
# cache
# ----------------------------------------------------------------------


def test_basis_cache_roundtrip(tmp_path, sphere, sphere_basis):
    path = tmp_path / "basis.bin"
    write_basis_cache(path, sphere_basis)
    back = read_basis_cache(path, sphere.mass)
    assert np.array_equal(back.eigenvalues, sphere_basis.eigenvalues)
    assert np.array_equal(back.eigenfunctions, sphere_basis.eigenfunctions)


def test_basis_cache_layout(tmp_path, sphere_basis):
    # header n, k then eigenvalues then column-major eigenfunctions, all f8
    path = tmp_path / "basis.bin"
    write_basis_cache(path, sphere_basis)
    raw = np.fromfile(path, dtype="<f8")
    n, k = int(raw[0]), int(raw[1])
    assert (n, k) == (sphere_basis.n, sphere_basis.k)
    assert raw.size == 2 + k + n * k
    assert_allclose(raw[2:2 + k], sphere_basis.eigenvalues, rtol=0)
    col0 = raw[2 + k:2 + k + n]
    assert_allclose(col0, sphere_basis.eigenfunctions[:, 0], rtol=0)


def test_basis_cache_path_keyed_by_content(tmp_path):
    p1 = tmp_path / "m1.off"
    p2 = tmp_path / "m2.off"
    meshgen.write_off(p1, meshgen.icosahedron())
    meshgen.write_off(p2, meshgen.icosphere(1))
    assert basis_cache_path(p1, 10) != basis_cache_path(p2, 10)
    assert basis_cache_path(p1, 10) != basis_cache_path(p1, 12)


def test_heat_negative_time_rejected(sphere_basis):
    with pytest.raises(ValueError):
        heat_operator(sphere_basis, -0.1)
