"""Pointwise descriptors: Gaussian landmark fields and wave-kernel signatures.

A descriptor is a scalar field over the vertices. Corresponding descriptor
pairs feed both the pointwise preservation term of the correspondence
energy and the construction of pairwise kernel operators, so a pair is
always normalized with a *shared* affine map: rescaling each side with its
own min/max would assign different values to corresponding points.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSpectrumError, DimensionError, ParseError
from .mesh import geodesic_distances

CONSTANT_EPS = 1e-12
DEFAULT_SIGMA_D_FRACTION = 0.05
WKS_SIGMA_FACTOR = 7.0


@dataclass
class PointwiseDescriptor:
    """A scalar field per vertex with provenance metadata.

    kind is one of "gaussian-landmark", "wks", "external"; meta holds the
    landmark vertex index or the WKS energy level. ``constant`` flags
    fields that normalization left untouched.
    """

    values: np.ndarray
    kind: str
    meta: dict
    normalized: bool = False
    constant: bool = False

    @property
    def n(self):
        return self.values.shape[0]


@dataclass
class DescriptorSet:
    """Ordered, index-aligned descriptor pairs for a shape pair."""

    source: list
    target: list

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise DimensionError(
                f"{len(self.source)} source vs {len(self.target)} target descriptors"
            )

    def __len__(self):
        return len(self.source)

    def truncated(self, count):
        return DescriptorSet(self.source[:count], self.target[:count])


def gaussian_landmark(mesh, landmark, sigma_d=None):
    """Gaussian of geodesic distance around a landmark vertex.

    value(x) = exp(-d(landmark, x)^2 / sigma_d^2). When sigma_d is None it
    defaults to 0.05 x mesh diameter, which stays localized but
    non-degenerate across shapes.
    """
    if sigma_d is None:
        sigma_d = DEFAULT_SIGMA_D_FRACTION * mesh.diameter
    if sigma_d <= 0:
        raise ValueError(f"sigma_d must be positive, got {sigma_d}")
    d = geodesic_distances(mesh, landmark).distances
    values = np.exp(-(d ** 2) / sigma_d ** 2)
    return PointwiseDescriptor(
        values=values, kind="gaussian-landmark",
        meta={"landmark": int(landmark), "sigma_d": float(sigma_d)},
    )


def wks(basis, n_levels):
    """Wave-kernel signature descriptors, one per energy level.

    Energy levels are log-spaced between log(lambda_2) and log(lambda_k);
    the level bandwidth is 7x the spacing and each level is normalized so
    its Gaussian weights sum to one. The constant eigenpair is skipped.
    """
    if n_levels < 2:
        raise ValueError(f"need at least 2 energy levels, got {n_levels}")
    if basis.k < 3:
        raise DegenerateSpectrumError(f"basis too small for WKS (k={basis.k})")
    lam = basis.eigenvalues[1:]
    if lam[0] <= 0:
        raise DegenerateSpectrumError(f"lambda_2 = {lam[0]:.3e} is not positive")
    log_lam = np.log(lam)
    energies = np.linspace(log_lam[0], log_lam[-1], n_levels)
    spacing = (log_lam[-1] - log_lam[0]) / (n_levels - 1)
    sigma_e = WKS_SIGMA_FACTOR * spacing
    if sigma_e <= 0:
        raise DegenerateSpectrumError("degenerate energy range for WKS")
    phi_sq = basis.eigenfunctions[:, 1:] ** 2
    out = []
    for level, e in enumerate(energies):
        w = np.exp(-((e - log_lam) ** 2) / (2 * sigma_e ** 2))
        values = phi_sq @ w / w.sum()
        out.append(PointwiseDescriptor(
            values=values, kind="wks",
            meta={"level": level, "energy": float(e), "sigma_e": float(sigma_e)},
        ))
    return out


def load_descriptor(path, n=None):
    """Read an external descriptor: one float per vertex line."""
    with open(path, "r") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        values = np.array([float(ln) for ln in lines])
    except ValueError as exc:
        raise ParseError(f"{path}: malformed descriptor file ({exc})") from exc
    if n is not None and values.shape[0] != n:
        raise DimensionError(f"{path}: {values.shape[0]} values for a {n}-vertex mesh")
    return PointwiseDescriptor(values=values, kind="external", meta={"path": str(path)})


def save_descriptor(path, values):
    with open(path, "w") as fh:
        for v in np.asarray(values, dtype=np.float64):
            fh.write(f"{v:.17g}\n")


def read_landmark_pairs(path):
    """Read landmark pairs: one "src tgt" vertex-index pair per line."""
    pairs = []
    with open(path, "r") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 2:
                raise ParseError(f"{path}: expected 'src tgt' pairs, got {ln!r}")
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


# ----------------------------------------------------------------------
# normalization
# ----------------------------------------------------------------------


def _affine_to_unit(values, lo, hi):
    return (values - lo) / (hi - lo)


def normalize_descriptor(d):
    """Affinely rescale a descriptor to [0, 1] by its min and max.

    A constant field (range below 1e-12) is returned unchanged with its
    ``constant`` flag set. Idempotent.
    """
    lo = float(d.values.min())
    hi = float(d.values.max())
    if hi - lo < CONSTANT_EPS:
        return replace(d, normalized=True, constant=True)
    return replace(d, values=_affine_to_unit(d.values, lo, hi), normalized=True)


def normalize_pair(dx, dy):
    """Rescale a corresponding descriptor pair with one shared affine map.

    The map is computed from the union of both value ranges so that
    corresponding points keep equal values; per-side normalization would
    break pointwise preservation by construction.
    """
    lo = min(float(dx.values.min()), float(dy.values.min()))
    hi = max(float(dx.values.max()), float(dy.values.max()))
    if hi - lo < CONSTANT_EPS:
        return (replace(dx, normalized=True, constant=True),
                replace(dy, normalized=True, constant=True))
    return (replace(dx, values=_affine_to_unit(dx.values, lo, hi), normalized=True),
            replace(dy, values=_affine_to_unit(dy.values, lo, hi), normalized=True))
