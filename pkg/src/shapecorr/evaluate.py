"""Correspondence quality metrics and the dense spatial energy oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SizeGuardError
from .mesh import geodesic_distance_matrix, mesh_diameter

CURVE_THRESHOLDS = np.round(np.arange(0, 26) * 0.01, 2)
ENERGY_ORACLE_MAX_N = 10


@dataclass
class ErrorCurve:
    """Per-vertex normalized geodesic errors with summary statistics.

    errors are geodesic distances on the target between predicted and
    true matches, divided by the target diameter. The cumulative curve
    gives the fraction of vertices with error <= threshold.
    """

    errors: np.ndarray
    thresholds: np.ndarray
    cumulative: np.ndarray

    @property
    def mean(self):
        return float(self.errors.mean())

    @property
    def median(self):
        return float(np.median(self.errors))


def geodesic_error(predicted, ground_truth, mesh_y, diameter=None):
    """Score a vertex map against ground truth on the target mesh.

    Parameters
    ----------
    predicted, ground_truth : CorrespondenceMap or index arrays over the
        same source mesh, with targets on ``mesh_y``
    mesh_y : target TriangleMesh
    diameter : optional precomputed geodesic diameter of ``mesh_y``
    """
    pred = np.asarray(predicted.targets if hasattr(predicted, "targets") else predicted,
                      dtype=np.int64)
    true = np.asarray(ground_truth.targets if hasattr(ground_truth, "targets") else ground_truth,
                      dtype=np.int64)
    if pred.shape != true.shape:
        raise DimensionError(f"map lengths disagree: {pred.shape[0]} vs {true.shape[0]}")
    if diameter is None:
        diameter = mesh_diameter(mesh_y)

    errors = np.zeros(pred.shape[0])
    differ = pred != true
    if differ.any():
        sources = np.unique(true[differ])
        dist = geodesic_distance_matrix(mesh_y, sources)
        row = {int(s): i for i, s in enumerate(sources)}
        idx = np.nonzero(differ)[0]
        errors[idx] = dist[[row[int(true[i])] for i in idx], pred[idx]]
    errors /= diameter

    cumulative = np.array([(errors <= thr).mean() for thr in CURVE_THRESHOLDS])
    return ErrorCurve(errors=errors, thresholds=CURVE_THRESHOLDS.copy(),
                      cumulative=cumulative)


def spatial_energy_oracle(perm, fx, fy, ops_x, ops_y, alpha=1.0):
    """Dense correspondence energy of an explicit permutation (test only).

    Evaluates the pointwise preservation term plus alpha times the
    operator commutativity term with full n x n matrices; guarded to
    n <= 10 so it is only ever used to cross-check tiny instances by
    exhaustive search.

    Parameters
    ----------
    perm : (n,) target index per source vertex (a permutation)
    fx, fy : lists of per-vertex descriptor value arrays
    ops_x, ops_y : lists of dense (n, n) operator matrices
    """
    perm = np.asarray(perm, dtype=np.int64)
    n = perm.shape[0]
    if n > ENERGY_ORACLE_MAX_N:
        raise SizeGuardError(f"energy oracle limited to n <= {ENERGY_ORACLE_MAX_N}, got {n}")
    if len(fx) != len(fy) or len(ops_x) != len(ops_y):
        raise DimensionError("descriptor/operator lists must pair up")
    pi = np.zeros((n, n))
    pi[perm, np.arange(n)] = 1.0

    energy = 0.0
    for a, b in zip(fx, fy):
        energy += float(np.sum((pi @ np.asarray(a) - np.asarray(b)) ** 2))
    for ox, oy in zip(ops_x, ops_y):
        ox = np.asarray(ox)
        oy = np.asarray(oy)
        if ox.shape != (n, n) or oy.shape != (n, n):
            raise DimensionError("oracle operators must be dense n x n")
        energy += alpha * float(np.linalg.norm(pi @ ox - oy @ pi, "fro") ** 2)
    return energy
