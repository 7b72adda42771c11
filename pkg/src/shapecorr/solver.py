"""Regularized functional-map estimation, refinement and map recovery.

The correspondence matrix C minimizes

    sum_i ||C fx_i - fy_i||^2 / ||fy_i||^2
  + alpha * sum_j ||C OX_j - OY_j C||_F^2 / ||OX_j||_F^2

over all k_Y x k_X matrices. Terms are individually normalized so that
alpha = 1 balances heterogeneous magnitudes. The minimum-norm solution is
computed matrix-free by conjugate gradients on the normal equations
(starting from zero keeps the iterates in the row space, so the limit is
the pseudo-inverse solution); a dense stacked least-squares path doubles
as oracle and is the default for small k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DimensionError

DENSE_SOLVE_MAX_K = 30
NORM_FLOOR = 1e-30


@dataclass
class SolverConfig:
    """Knobs of the end-to-end solve.

    alpha weights the operator-commutativity energy; t, sigma, gamma
    parametrize the heat + descriptor-kernel operators; sigma_d is the
    Gaussian landmark width (None = 0.05 x diameter); n0 the number of
    kernel sample columns.
    """

    k: int = 60
    alpha: float = 1.0
    t: float = 1e-3
    sigma: float = 3.0
    gamma: float = 1.0
    sigma_d: float | None = None
    n0: int = 100
    icp_iterations: int = 10
    # normal equations square the conditioning: tolerances much below
    # 1e-8 sit under the float64 round-off floor of ill-conditioned
    # operator-commutativity instances
    cg_tol: float = 1e-8
    cg_maxiter: int = 20000

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.icp_iterations < 0:
            raise ValueError(f"icp_iterations must be >= 0, got {self.icp_iterations}")


@dataclass
class FunctionalMap:
    """A k_Y x k_X spectral correspondence matrix plus solve diagnostics."""

    C: np.ndarray
    basis_x: object = None
    basis_y: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.C.shape


@dataclass
class CorrespondenceMap:
    """Target vertex index per source vertex."""

    targets: np.ndarray
    method: str = "nn-spectral"

    @property
    def n(self):
        return self.targets.shape[0]


def commutator_residual(C, op_x, op_y):
    """Squared Frobenius norm of C OX - OY C."""
    C = np.asarray(C, dtype=np.float64)
    ox = op_x.matrix if hasattr(op_x, "matrix") else np.asarray(op_x)
    oy = op_y.matrix if hasattr(op_y, "matrix") else np.asarray(op_y)
    if C.shape[1] != ox.shape[0] or oy.shape[1] != C.shape[0]:
        raise DimensionError(
            f"commutator shapes C{C.shape}, OX{ox.shape}, OY{oy.shape} disagree"
        )
    return float(np.linalg.norm(C @ ox - oy @ C, "fro") ** 2)


def _stack_terms(fx, fy, ops_x, ops_y):
    """Validate term lists and return normalized (FX, FY, ox[], oy[])."""
    if len(fx) != len(fy):
        raise DimensionError(f"{len(fx)} source vs {len(fy)} target coefficient vectors")
    if len(ops_x) != len(ops_y):
        raise DimensionError(f"{len(ops_x)} source vs {len(ops_y)} target operators")
    fx_cols, fy_cols = [], []
    for a, b in zip(fx, fy):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        w = np.linalg.norm(b)
        if w < NORM_FLOOR:
            w = 1.0
        fx_cols.append(a / w)
        fy_cols.append(b / w)
    ox_list, oy_list = [], []
    for a, b in zip(ops_x, ops_y):
        ma = a.matrix if hasattr(a, "matrix") else np.asarray(a, dtype=np.float64)
        mb = b.matrix if hasattr(b, "matrix") else np.asarray(b, dtype=np.float64)
        w = np.linalg.norm(ma, "fro")
        if w < NORM_FLOOR:
            w = 1.0
        ox_list.append(ma / w)
        oy_list.append(mb / w)
    return fx_cols, fy_cols, ox_list, oy_list


def solve_fmap(fx, fy, ops_x, ops_y, cfg, basis_x=None, basis_y=None,
               k_x=None, k_y=None, method="auto"):
    """Least-squares functional map from descriptor and operator pairs.

    Parameters
    ----------
    fx, fy : lists of spectral coefficient vectors (length k_X resp. k_Y)
    ops_x, ops_y : lists of SpectralOperator (or k x k arrays), paired
    cfg : SolverConfig (alpha, cg tolerances)
    basis_x, basis_y : bases stored on the result for map recovery
    k_x, k_y : dimensions, required only when every term list is empty
        and no bases are given
    method : {"auto", "dense", "cg"}

    Returns the minimum-norm solution; a rank warning is recorded in the
    diagnostics when the system is detectably rank-deficient (the
    solution is still returned).
    """
    fx_cols, fy_cols, ox_list, oy_list = _stack_terms(fx, fy, ops_x, ops_y)

    if fx_cols:
        k_x = fx_cols[0].shape[0]
        k_y = fy_cols[0].shape[0]
    elif ox_list:
        k_x = ox_list[0].shape[0]
        k_y = oy_list[0].shape[0]
    elif basis_x is not None and basis_y is not None:
        k_x, k_y = basis_x.k, basis_y.k
    elif k_x is None or k_y is None:
        raise DimensionError("empty problem: pass k_x and k_y explicitly")

    for v in fx_cols:
        if v.shape[0] != k_x:
            raise DimensionError("inconsistent source coefficient lengths")
    for v in fy_cols:
        if v.shape[0] != k_y:
            raise DimensionError("inconsistent target coefficient lengths")
    for m in ox_list:
        if m.shape != (k_x, k_x):
            raise DimensionError("source operators must be k_X x k_X")
    for m in oy_list:
        if m.shape != (k_y, k_y):
            raise DimensionError("target operators must be k_Y x k_Y")

    FX = np.stack(fx_cols, axis=1) if fx_cols else np.zeros((k_x, 0))
    FY = np.stack(fy_cols, axis=1) if fy_cols else np.zeros((k_y, 0))
    alpha = cfg.alpha

    diagnostics = {"n_descriptor_terms": len(fx_cols), "n_operator_terms": len(ox_list),
                   "rank_warning": False, "iterations": 0}
    if not fx_cols and not ox_list:
        diagnostics["rank_warning"] = True
        diagnostics["method"] = "empty"
        C = np.zeros((k_y, k_x))
        _record_residuals(C, FX, FY, ox_list, oy_list, alpha, diagnostics)
        return FunctionalMap(C=C, basis_x=basis_x, basis_y=basis_y,
                             diagnostics=diagnostics)

    if method == "auto":
        method = "dense" if max(k_x, k_y) <= DENSE_SOLVE_MAX_K else "cg"
    if method == "dense":
        C = _solve_dense(FX, FY, ox_list, oy_list, alpha, k_x, k_y, diagnostics)
    elif method == "cg":
        C = _solve_cg(FX, FY, ox_list, oy_list, alpha, k_x, k_y, cfg, diagnostics)
    else:
        raise ValueError(f"unknown method {method!r}")

    _record_residuals(C, FX, FY, ox_list, oy_list, alpha, diagnostics)
    return FunctionalMap(C=C, basis_x=basis_x, basis_y=basis_y, diagnostics=diagnostics)


def _record_residuals(C, FX, FY, ox_list, oy_list, alpha, diagnostics):
    desc = [float(np.linalg.norm(C @ FX[:, i] - FY[:, i]) ** 2)
            for i in range(FX.shape[1])]
    comm = [float(np.linalg.norm(C @ ox - oy @ C, "fro") ** 2)
            for ox, oy in zip(ox_list, oy_list)]
    diagnostics["descriptor_residuals"] = desc
    diagnostics["commutator_residuals"] = comm
    diagnostics["objective"] = sum(desc) + alpha * sum(comm)


def _solve_dense(FX, FY, ox_list, oy_list, alpha, k_x, k_y, diagnostics):
    """Stacked least squares on vec(C) (column-major), minimum-norm."""
    blocks = []
    rhs = []
    eye_y = np.eye(k_y)
    eye_x = np.eye(k_x)
    if FX.shape[1]:
        blocks.append(np.kron(FX.T, eye_y))
        rhs.append(FY.flatten(order="F"))
    root = np.sqrt(alpha)
    for ox, oy in zip(ox_list, oy_list):
        blocks.append(root * (np.kron(ox.T, eye_y) - np.kron(eye_x, oy)))
        rhs.append(np.zeros(k_x * k_y))
    M = np.vstack(blocks)
    b = np.concatenate(rhs)
    x, _, rank, _ = np.linalg.lstsq(M, b, rcond=None)
    if rank < k_x * k_y:
        diagnostics["rank_warning"] = True
    diagnostics["method"] = "dense"
    diagnostics["rank"] = int(rank)
    return x.reshape((k_y, k_x), order="F")


def _solve_cg(FX, FY, ox_list, oy_list, alpha, k_x, k_y, cfg, diagnostics):
    """Conjugate gradients on the normal equations, matrix-free."""

    def normal_apply(c_vec):
        C = c_vec.reshape((k_y, k_x), order="F")
        out = np.zeros_like(C)
        if FX.shape[1]:
            out += (C @ FX) @ FX.T
        for ox, oy in zip(ox_list, oy_list):
            r = C @ ox - oy @ C
            out += alpha * (r @ ox.T - oy.T @ r)
        return out.flatten(order="F")

    n_unknown = k_x * k_y
    op = spla.LinearOperator((n_unknown, n_unknown), matvec=normal_apply,
                             dtype=np.float64)
    rhs = (FY @ FX.T).flatten(order="F")

    iterations = [0]

    def count(_):
        iterations[0] += 1

    x, info = spla.cg(op, rhs, x0=np.zeros(n_unknown), rtol=cfg.cg_tol,
                      atol=0.0, maxiter=cfg.cg_maxiter, callback=count)
    if info > 0:
        raise ConvergenceError(
            f"CG did not reach rtol={cfg.cg_tol:g} within {cfg.cg_maxiter} iterations"
        )
    if info < 0:
        raise ConvergenceError(f"CG breakdown (info={info})")
    diagnostics["method"] = "cg"
    diagnostics["iterations"] = iterations[0]
    return x.reshape((k_y, k_x), order="F")


# ----------------------------------------------------------------------
# map recovery
# ----------------------------------------------------------------------


def _nn_match(C, phi, psi, chunk=2048):
    """Nearest target row of psi for each source embedding row phi C^T."""
    emb = phi @ C.T  # (n_x, k_y)
    targets = np.empty(emb.shape[0], dtype=np.int64)
    psi_sq = (psi ** 2).sum(axis=1)
    for start in range(0, emb.shape[0], chunk):
        rows = emb[start:start + chunk]
        d = psi_sq[None, :] - 2.0 * (rows @ psi.T)
        targets[start:start + chunk] = np.argmin(d, axis=1)
    return targets


def p2p_from_fmap(fmap):
    """Recover a vertex map by nearest neighbors in the spectral embedding.

    Each source vertex's embedding row (C Phi^T e_x) is matched to the
    nearest row of Psi in Euclidean norm, ties broken by lowest index.
    """
    if fmap.basis_x is None or fmap.basis_y is None:
        raise DimensionError("functional map carries no bases; cannot recover map")
    targets = _nn_match(fmap.C, fmap.basis_x.eigenfunctions,
                        fmap.basis_y.eigenfunctions)
    return CorrespondenceMap(targets=targets, method="nn-spectral")


def fmap_from_p2p(mapping, basis_x, basis_y):
    """Spectral matrix of a vertex map: Psi^T A_Y Pi Phi.

    Pi scatters source functions onto the target (Pi[t(x), x] = 1), so
    the composition pulls Phi rows through the map and projects them in
    the target basis.
    """
    targets = np.asarray(mapping.targets if hasattr(mapping, "targets") else mapping,
                         dtype=np.int64)
    if targets.shape[0] != basis_x.n:
        raise DimensionError(f"map over {targets.shape[0]} vertices, source has {basis_x.n}")
    n_y = basis_y.n
    pi = sp.csr_matrix(
        (np.ones(targets.shape[0]), (targets, np.arange(targets.shape[0]))),
        shape=(n_y, basis_x.n),
    )
    pulled = pi @ basis_x.eigenfunctions  # (n_y, k_x)
    return FunctionalMap(
        C=basis_y.eigenfunctions.T @ (basis_y.mass[:, None] * pulled),
        basis_x=basis_x, basis_y=basis_y,
        diagnostics={"method": "from-p2p"},
    )


def icp_refine(fmap0, iterations):
    """Alternate nearest-neighbor matching and orthogonal re-fitting of C.

    Each pass matches source embeddings to target rows, then replaces C by
    the orthogonal Procrustes fit U V^T of the matched embeddings (SVD of
    Psi_matched^T A_X Phi). Iterations that do not decrease the matching
    residual terminate the loop early; per-iteration residuals are kept in
    the diagnostics.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    if iterations == 0:
        return fmap0
    basis_x, basis_y = fmap0.basis_x, fmap0.basis_y
    if basis_x is None or basis_y is None:
        raise DimensionError("functional map carries no bases; cannot refine")
    phi = basis_x.eigenfunctions
    psi = basis_y.eigenfunctions
    mass_x = basis_x.mass
    r = min(fmap0.C.shape)

    def residual(C, targets):
        mismatch = phi @ C.T - psi[targets]
        return float(np.sum(mass_x[:, None] * mismatch ** 2))

    C = fmap0.C
    residuals = []
    stopped_early = False
    for _ in range(iterations):
        matched = _nn_match(C, phi, psi)
        W = psi[matched].T @ (mass_x[:, None] * phi)
        U, _, Vt = np.linalg.svd(W)
        cand = U[:, :r] @ Vt[:r, :]
        res = residual(cand, matched)
        if residuals and res >= residuals[-1]:
            stopped_early = True
            break
        residuals.append(res)
        C = cand
    diag = dict(fmap0.diagnostics)
    diag["icp_residuals"] = residuals
    diag["icp_stopped_early"] = stopped_early
    return FunctionalMap(C=C, basis_x=basis_x, basis_y=basis_y, diagnostics=diag)


# ----------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------


def write_fmap_csv(path, fmap):
    """Persist C as CSV: k_Y rows of k_X comma-separated values."""
    C = fmap.C if hasattr(fmap, "C") else np.asarray(fmap)
    with open(path, "w") as fh:
        for row in C:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_fmap_csv(path):
    rows = []
    with open(path, "r") as fh:
        for ln in fh:
            ln = ln.strip()
            if ln:
                rows.append([float(tok) for tok in ln.split(",")])
    return np.array(rows)
