import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

import meshgen
from shapecorr.errors import SizeGuardError
from shapecorr.evaluate import geodesic_error, spatial_energy_oracle
from shapecorr.mesh import geodesic_distance_matrix, mesh_diameter


def test_exact_map_zero_error(ico):
    gt = np.arange(ico.n_vertices)
    curve = geodesic_error(gt, gt, ico)
    assert_allclose(curve.errors, 0.0)
    assert curve.mean == 0.0
    assert curve.median == 0.0
    assert_allclose(curve.cumulative, 1.0)


def test_off_by_one_edge(ico):
    # every prediction lands on a neighbor of the true target: the mean
    # error is the mean neighbor distance over the diameter
    gt = np.arange(ico.n_vertices)
    pred = np.array([ico.one_ring(v)[0] for v in gt])
    edge_lengths = np.array([
        np.linalg.norm(ico.vertices[v] - ico.vertices[p])
        for v, p in zip(gt, pred)
    ])
    curve = geodesic_error(pred, gt, ico)
    assert_allclose(curve.errors, edge_lengths / mesh_diameter(ico), rtol=1e-12)


def test_random_map_matches_brute_force(ico, rng):
    gt = np.arange(ico.n_vertices)
    pred = rng.integers(0, ico.n_vertices, size=ico.n_vertices)
    curve = geodesic_error(pred, gt, ico)
    d = geodesic_distance_matrix(ico, np.arange(ico.n_vertices))
    expected = np.array([d[g, p] for g, p in zip(gt, pred)]) / mesh_diameter(ico)
    assert_allclose(curve.errors, expected, rtol=1e-12)
    assert_allclose(curve.mean, expected.mean(), rtol=1e-12)


def test_curve_shape_and_monotonicity(ico, rng):
    pred = rng.integers(0, ico.n_vertices, size=ico.n_vertices)
    curve = geodesic_error(pred, np.arange(ico.n_vertices), ico)
    assert curve.thresholds[0] == 0.0
    assert curve.thresholds[-1] == 0.25
    assert len(curve.thresholds) == 26
    assert (np.diff(curve.cumulative) >= 0).all()
    assert curve.cumulative[-1] <= 1.0
    assert (curve.errors >= 0).all()


# ----------------------------------------------------------------------
# spatial energy oracle
# ----------------------------------------------------------------------


def _toy_instance(rng, n=6, n_desc=2):
    mesh = meshgen.irregular_octahedron()
    assert mesh.n_vertices == n
    fx = [rng.uniform(0, 1, n) for _ in range(n_desc)]
    ox = [rng.standard_normal((n, n)) for _ in range(1)]
    return mesh, fx, ox


def test_energy_identity_is_zero(rng):
    mesh, fx, ox = _toy_instance(rng)
    e = spatial_energy_oracle(np.arange(6), fx, fx, ox, ox)
    assert e == 0.0


def test_energy_hand_computed():
    f = [np.array([1.0, 0.0, 2.0])]
    g = [np.array([0.0, 1.0, 2.0])]
    perm = np.array([1, 0, 2])
    # Pi f = (0, 1, 2) equals g exactly: pointwise term zero
    assert spatial_energy_oracle(perm, f, g, [], []) == 0.0
    # identity instead: ||f - g||^2 = 1 + 1 + 0
    assert_allclose(spatial_energy_oracle(np.arange(3), f, g, [], []), 2.0)


def test_energy_relabel_invariance(rng):
    mesh, fx, ox = _toy_instance(rng)
    fy = [v.copy() for v in fx]
    oy = [m.copy() for m in ox]
    perm = np.array([2, 0, 1, 4, 3, 5])
    base = spatial_energy_oracle(perm, fx, fy, ox, oy, alpha=0.7)

    rho_x = np.array([1, 2, 3, 4, 5, 0])  # relabel X
    rho_y = np.array([5, 4, 3, 2, 1, 0])  # relabel Y
    fx2 = [np.empty(6) for _ in fx]
    fy2 = [np.empty(6) for _ in fy]
    for a, b in zip(fx2, fx):
        a[rho_x] = b
    for a, b in zip(fy2, fy):
        a[rho_y] = b
    ox2 = []
    for m in ox:
        m2 = np.empty_like(m)
        m2[np.ix_(rho_x, rho_x)] = m
        ox2.append(m2)
    oy2 = []
    for m in oy:
        m2 = np.empty_like(m)
        m2[np.ix_(rho_y, rho_y)] = m
        oy2.append(m2)
    perm2 = np.empty(6, dtype=int)
    perm2[rho_x] = rho_y[perm]
    moved = spatial_energy_oracle(perm2, fx2, fy2, ox2, oy2, alpha=0.7)
    assert_allclose(moved, base, rtol=1e-12)


def test_energy_size_guard():
    with pytest.raises(SizeGuardError):
        spatial_energy_oracle(np.arange(11), [], [], [], [])


def test_exhaustive_minimum_prefers_truth(rng):
    # descriptors sampled around a known permutation: the brute-force
    # minimizer over S_4 must be that permutation
    n = 4
    truth = np.array([2, 0, 3, 1])
    fx = [rng.uniform(0, 1, n) for _ in range(3)]
    fy = [np.empty(n) for _ in fx]
    for a, b in zip(fy, fx):
        a[truth] = b
    ox = [rng.standard_normal((n, n)) for _ in range(2)]
    oy = []
    pi = np.zeros((n, n))
    pi[truth, np.arange(n)] = 1.0
    for m in ox:
        oy.append(pi @ m @ pi.T)
    energies = {
        perm: spatial_energy_oracle(np.array(perm), fx, fy, ox, oy)
        for perm in itertools.permutations(range(n))
    }
    best = min(energies, key=energies.get)
    assert np.array_equal(best, truth)
    assert_allclose(energies[best], 0.0, atol=1e-22)
