"""Pairwise kernel operators and their spectral projections.

A pointwise descriptor f induces the similarity kernel
K(x, x') = exp(-(f(x) - f(x'))^2 / (2 sigma^2)). Its spectral image is
computed through a low-rank column-sampling factorization K ~ R R0^-1 R^T
so the n x n kernel is never materialized outside test oracles. Spectral
projections are mass-weighted throughout (Phi^T A K A Phi), consistent
with the projection of pointwise-multiplication operators; the unweighted
form is recoverable by passing a unit mass vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularCoreError, SizeGuardError
from .spectral import heat_operator

CORE_REG_FACTOR = 1e-8
DENSE_ORACLE_MAX_N = 2000
DEFAULT_N_SAMPLES = 100


@dataclass
class DescriptorKernel:
    """Similarity kernel generated by a pointwise descriptor.

    bandwidth applies to the descriptor values as given; feed normalized
    descriptors so one bandwidth is comparable across descriptors.
    Evaluation is on demand: K(x, x') = exp(-(f(x)-f(x'))^2 / (2 sigma^2)).
    """

    descriptor_values: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        self.descriptor_values = np.asarray(self.descriptor_values, dtype=np.float64)

    @property
    def n(self):
        return self.descriptor_values.shape[0]

    def eval(self, x, xp):
        """Kernel value for a vertex pair."""
        diff = self.descriptor_values[x] - self.descriptor_values[xp]
        return float(np.exp(-(diff ** 2) / (2 * self.bandwidth ** 2)))

    def columns(self, samples):
        """Kernel columns against all vertices, (n, len(samples))."""
        f = self.descriptor_values
        diff = f[:, None] - f[np.asarray(samples, dtype=np.int64)][None, :]
        return np.exp(-(diff ** 2) / (2 * self.bandwidth ** 2))

    def dense(self, max_n=DENSE_ORACLE_MAX_N):
        """Full kernel matrix; test-oracle use only, guarded by size."""
        if self.n > max_n:
            raise SizeGuardError(f"dense kernel of size {self.n} exceeds guard {max_n}")
        return self.columns(np.arange(self.n))


@dataclass
class NystromFactors:
    """Column-sampling factors of one kernel: K ~ R R0^-1 R^T.

    samples : distinct vertex indices (n0,)
    projected : Phi^T A R, (k, n0)
    core : the symmetric sample-sample block R0, (n0, n0)
    reg : Tikhonov term added to the core before inversion
    """

    samples: np.ndarray
    projected: np.ndarray
    core: np.ndarray
    reg: float


@dataclass
class SpectralOperator:
    """A k x k spectral image of a pairwise operator."""

    matrix: np.ndarray
    kind: str  # bilateral | diagonal | heat | descriptor-kernel
    shape_tag: str = ""

    @property
    def k(self):
        return self.matrix.shape[0]


def nystrom_factors(kernel, basis, samples, mass=None):
    """Assemble column-sampling factors for a descriptor kernel.

    The projected block is Phi^T A R (mass-weighted); pass ``mass`` of
    ones to recover the unweighted Phi^T R.
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size < 1:
        raise ValueError("need at least one sample")
    if np.unique(samples).size != samples.size:
        raise ValueError("sample indices must be distinct")
    if kernel.n != basis.n:
        raise DimensionError(f"kernel over {kernel.n} vertices, basis over {basis.n}")
    if mass is None:
        mass = basis.mass
    cols = kernel.columns(samples)
    core = cols[samples, :]
    core = (core + core.T) * 0.5
    projected = basis.eigenfunctions.T @ (mass[:, None] * cols)
    reg = CORE_REG_FACTOR * np.trace(core) / samples.size
    return NystromFactors(samples=samples, projected=projected, core=core, reg=float(reg))


def spectral_kernel(factors, shape_tag=""):
    """Spectral image of the kernel: P (R0 + eps I)^-1 P^T, symmetrized."""
    n0 = factors.core.shape[0]
    regularized = factors.core + factors.reg * np.eye(n0)
    try:
        cho = scipy.linalg.cho_factor(regularized, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularCoreError(
            f"regularized kernel core ({n0} x {n0}) is not positive definite"
        ) from exc
    m = factors.projected @ scipy.linalg.cho_solve(cho, factors.projected.T)
    m = (m + m.T) * 0.5
    return SpectralOperator(matrix=m, kind="descriptor-kernel", shape_tag=shape_tag)


def bilateral_operator(basis, kernel, t, gamma, samples, shape_tag=""):
    """Additive heat + descriptor-kernel operator in the spectral basis.

    diag(exp(-lambda_i t)) + gamma * (spectral kernel image). With
    gamma = 0 this is exactly the heat operator.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    heat = heat_operator(basis, t)
    if gamma == 0:
        return SpectralOperator(matrix=heat, kind="bilateral", shape_tag=shape_tag)
    kern = spectral_kernel(nystrom_factors(kernel, basis, samples))
    return SpectralOperator(matrix=heat + gamma * kern.matrix, kind="bilateral",
                            shape_tag=shape_tag)


def heat_spectral_operator(basis, t, shape_tag=""):
    """The heat operator alone, tagged for pipeline use."""
    return SpectralOperator(matrix=heat_operator(basis, t), kind="heat",
                            shape_tag=shape_tag)


def diagonal_operator(basis, descriptor_values, shape_tag=""):
    """Spectral image of pointwise multiplication by a descriptor.

    Phi^T A diag(f) Phi: the operator-commutativity baseline built from
    the descriptor alone.
    """
    f = np.asarray(descriptor_values, dtype=np.float64)
    if f.shape[0] != basis.n:
        raise DimensionError(f"descriptor has {f.shape[0]} entries, mesh has {basis.n}")
    phi = basis.eigenfunctions
    m = phi.T @ ((basis.mass * f)[:, None] * phi)
    return SpectralOperator(matrix=m, kind="diagonal", shape_tag=shape_tag)


def dense_operator_oracle(kernel, basis, mass=None):
    """Dense Phi^T A K A Phi for tests; guarded by the dense-size limit."""
    if mass is None:
        mass = basis.mass
    K = kernel.dense()
    phi_a = basis.eigenfunctions * mass[:, None]
    return phi_a.T @ K @ phi_a
