"""Spectral shape correspondence with pairwise kernel operators.

A geometry-processing library plus benchmark CLI that estimates dense
maps between triangle meshes: pointwise descriptors are lifted into
pairwise heat + descriptor-kernel operators whose commutativity with the
map is enforced in a spectral least-squares solve.
"""

from .config import ExperimentConfig, load_config
from .descriptors import (
    DescriptorSet,
    PointwiseDescriptor,
    gaussian_landmark,
    normalize_descriptor,
    normalize_pair,
    wks,
)
from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    DimensionError,
    DisconnectedError,
    ParseError,
    ShapeCorrError,
    SingularCoreError,
    SizeGuardError,
    ValidationError,
)
from .evaluate import ErrorCurve, geodesic_error, spatial_energy_oracle
from .export import export_scalar_field
from .mesh import (
    GeodesicField,
    TriangleMesh,
    barycentric_mass,
    cotangent_stiffness,
    farthest_point_sampling,
    geodesic_distances,
    load_mesh,
    mesh_diameter,
    read_correspondence,
    write_correspondence,
)
from .operators import (
    DescriptorKernel,
    NystromFactors,
    SpectralOperator,
    bilateral_operator,
    diagonal_operator,
    nystrom_factors,
    spectral_kernel,
)
from .pipeline import run_pipeline, sweep_descriptors
from .solver import (
    CorrespondenceMap,
    FunctionalMap,
    SolverConfig,
    commutator_residual,
    fmap_from_p2p,
    icp_refine,
    p2p_from_fmap,
    solve_fmap,
)
from .spectral import (
    SpectralBasis,
    eigendecompose,
    heat_kernel_rows,
    heat_operator,
    project,
    reconstruct,
)

__version__ = "0.1.0"
