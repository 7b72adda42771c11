"""End-to-end correspondence pipeline and the descriptor-budget sweep.

One run executes: load meshes -> eigendecompose -> build descriptor pairs
-> build pairwise operators for the chosen method -> least-squares solve
-> refinement -> vertex map recovery -> evaluation. All stages are
deterministic given the config (the seed picks the landmark sampling seed
vertex), so identical configs produce byte-identical artifacts.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import figures
from .config import ExperimentConfig, METHODS, config_rows
from .descriptors import (
    DescriptorSet,
    gaussian_landmark,
    load_descriptor,
    normalize_descriptor,
    normalize_pair,
    read_landmark_pairs,
    wks,
)
from .errors import ShapeCorrError, ValidationError
from .evaluate import geodesic_error
from .mesh import (
    TriangleMesh,
    farthest_point_sampling,
    load_mesh,
    read_correspondence,
    write_correspondence,
)
from .operators import (
    DescriptorKernel,
    bilateral_operator,
    diagonal_operator,
    nystrom_factors,
    spectral_kernel,
)
from .solver import (
    CorrespondenceMap,
    icp_refine,
    p2p_from_fmap,
    solve_fmap,
    write_fmap_csv,
)
from .spectral import (
    basis_cache_path,
    eigendecompose,
    project,
    read_basis_cache,
    write_basis_cache,
)

NYSTROM_SEED_VERTEX = 0  # kernel sample columns are FPS-ordered from here


@dataclass
class PipelineResult:
    fmap: object
    mapping: CorrespondenceMap
    curve: object  # ErrorCurve or None when no ground truth is given
    mesh_x: TriangleMesh
    mesh_y: TriangleMesh
    basis_x: object
    basis_y: object
    descriptors: DescriptorSet


@contextmanager
def _stage(name):
    """Tag library errors with the pipeline step they came from."""
    try:
        yield
    except ShapeCorrError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def shape_basis(mesh, k, mesh_path=None, cache=False):
    """Eigenbasis of one shape, optionally through the on-disk cache."""
    if cache and mesh_path:
        path = basis_cache_path(mesh_path, k)
        if os.path.exists(path):
            return read_basis_cache(path, mesh.mass)
        basis = eigendecompose(mesh.stiffness, mesh.mass, k)
        write_basis_cache(path, basis)
        return basis
    return eigendecompose(mesh.stiffness, mesh.mass, k)


def select_landmarks(cfg, mesh_x, gt_targets, count):
    """Landmark (src, tgt) pairs for Gaussian descriptors.

    From the landmark file when given; otherwise FPS on the source
    (seeded by the config seed) mapped through ground truth.
    """
    if cfg.landmarks:
        pairs = read_landmark_pairs(cfg.landmarks)
        if len(pairs) < count:
            raise ValidationError(
                f"landmark file has {len(pairs)} pairs, need {count}"
            )
        return pairs[:count]
    if gt_targets is None:
        raise ValidationError(
            "gaussian-landmark descriptors need a ground-truth file or landmark list"
        )
    seed_vertex = cfg.seed % mesh_x.n_vertices
    sources = farthest_point_sampling(mesh_x, count, seed_vertex=seed_vertex)
    return [(int(s), int(gt_targets[s])) for s in sources]


def build_descriptor_pairs(cfg, mesh_x, mesh_y, basis_x, basis_y, gt_targets,
                           count=None):
    """Corresponding descriptor pairs, jointly normalized to [0, 1]."""
    count = cfg.n_descriptors if count is None else count
    if count == 0:
        return DescriptorSet([], [])
    pairs = []
    if cfg.descriptor_source == "gaussian-landmark":
        landmarks = select_landmarks(cfg, mesh_x, gt_targets, count)
        sig_x = cfg.solver.sigma_d
        sig_y = cfg.solver.sigma_d
        if sig_x is None:
            sig_x = 0.05 * mesh_x.diameter
            sig_y = 0.05 * mesh_y.diameter
        for s, t in landmarks:
            pairs.append((gaussian_landmark(mesh_x, s, sig_x),
                          gaussian_landmark(mesh_y, t, sig_y)))
    elif cfg.descriptor_source == "wks":
        wx = wks(basis_x, count)
        wy = wks(basis_y, count)
        pairs = list(zip(wx, wy))
    else:  # external
        if len(cfg.descriptor_x) != len(cfg.descriptor_y):
            raise ValidationError("descriptor_x and descriptor_y list lengths differ")
        if len(cfg.descriptor_x) < count:
            raise ValidationError(
                f"{len(cfg.descriptor_x)} external descriptors, need {count}"
            )
        for px, py in zip(cfg.descriptor_x[:count], cfg.descriptor_y[:count]):
            pairs.append((load_descriptor(px, mesh_x.n_vertices),
                          load_descriptor(py, mesh_y.n_vertices)))
    normalized = [normalize_pair(dx, dy) for dx, dy in pairs]
    return DescriptorSet([dx for dx, _ in normalized], [dy for _, dy in normalized])


def build_operators(cfg, descriptors, mesh_x, mesh_y, basis_x, basis_y):
    """Per-method pairwise operator lists (empty for plain-fmap)."""
    if cfg.method == "plain-fmap":
        return [], []
    ops_x, ops_y = [], []
    if cfg.method == "diagonal":
        for dx, dy in zip(descriptors.source, descriptors.target):
            ops_x.append(diagonal_operator(basis_x, dx.values, shape_tag="X"))
            ops_y.append(diagonal_operator(basis_y, dy.values, shape_tag="Y"))
        return ops_x, ops_y
    # bilateral
    s = cfg.solver
    samples_x = farthest_point_sampling(mesh_x, min(s.n0, mesh_x.n_vertices),
                                        seed_vertex=NYSTROM_SEED_VERTEX)
    samples_y = farthest_point_sampling(mesh_y, min(s.n0, mesh_y.n_vertices),
                                        seed_vertex=NYSTROM_SEED_VERTEX)
    for dx, dy in zip(descriptors.source, descriptors.target):
        kx = DescriptorKernel(dx.values, s.sigma)
        ky = DescriptorKernel(dy.values, s.sigma)
        ops_x.append(bilateral_operator(basis_x, kx, s.t, s.gamma, samples_x,
                                        shape_tag="X"))
        ops_y.append(bilateral_operator(basis_y, ky, s.t, s.gamma, samples_y,
                                        shape_tag="Y"))
    return ops_x, ops_y


def run_pipeline(cfg, write=True):
    """Execute the full correspondence pipeline for one configuration.

    Returns a PipelineResult; when ``write`` is true all artifacts
    (map.txt, C.csv, errors.csv, curve.csv, run.csv and the report
    figures) go to ``cfg.out``.
    """
    with _stage("load"):
        mesh_x = load_mesh(cfg.source)
        mesh_y = load_mesh(cfg.target)
        gt = None
        if cfg.ground_truth:
            gt = read_correspondence(cfg.ground_truth, n_target=mesh_y.n_vertices)
            if gt.shape[0] != mesh_x.n_vertices:
                raise ValidationError(
                    f"ground truth covers {gt.shape[0]} vertices, "
                    f"source has {mesh_x.n_vertices}"
                )

    with _stage("eigendecompose"):
        basis_x = shape_basis(mesh_x, cfg.solver.k, cfg.source, cfg.cache_basis)
        basis_y = shape_basis(mesh_y, cfg.solver.k, cfg.target, cfg.cache_basis)

    with _stage("descriptors"):
        descriptors = build_descriptor_pairs(cfg, mesh_x, mesh_y, basis_x,
                                             basis_y, gt)
        fx = [project(basis_x, d.values) for d in descriptors.source]
        fy = [project(basis_y, d.values) for d in descriptors.target]

    with _stage("operators"):
        ops_x, ops_y = build_operators(cfg, descriptors, mesh_x, mesh_y,
                                       basis_x, basis_y)

    with _stage("solve"):
        fmap = solve_fmap(fx, fy, ops_x, ops_y, cfg.solver,
                          basis_x=basis_x, basis_y=basis_y)

    with _stage("refine"):
        fmap = icp_refine(fmap, cfg.solver.icp_iterations)

    with _stage("recover"):
        mapping = p2p_from_fmap(fmap)

    curve = None
    if gt is not None:
        with _stage("evaluate"):
            curve = geodesic_error(mapping, gt, mesh_y)

    result = PipelineResult(fmap=fmap, mapping=mapping, curve=curve,
                            mesh_x=mesh_x, mesh_y=mesh_y,
                            basis_x=basis_x, basis_y=basis_y,
                            descriptors=descriptors)
    if write:
        write_run_artifacts(cfg, result)
    return result


def write_run_artifacts(cfg, result):
    os.makedirs(cfg.out, exist_ok=True)
    write_correspondence(os.path.join(cfg.out, "map.txt"), result.mapping.targets)
    write_fmap_csv(os.path.join(cfg.out, "C.csv"), result.fmap)
    _write_run_record(cfg, result, os.path.join(cfg.out, "run.csv"))
    if result.curve is not None:
        write_error_csvs(cfg.out, result.curve)
        figures.plot_error_curve(result.curve,
                                 os.path.join(cfg.out, "curve.png"),
                                 label=cfg.method)


def write_error_csvs(outdir, curve):
    with open(os.path.join(outdir, "errors.csv"), "w") as fh:
        fh.write("vertex,normalized_error\n")
        for i, e in enumerate(curve.errors):
            fh.write(f"{i},{e:.17g}\n")
    with open(os.path.join(outdir, "curve.csv"), "w") as fh:
        fh.write("threshold,fraction\n")
        for thr, frac in zip(curve.thresholds, curve.cumulative):
            fh.write(f"{thr:.17g},{frac:.17g}\n")


def _write_run_record(cfg, result, path):
    rows = config_rows(cfg)
    rows.append(("descriptors_normalized",
                 str(all(d.normalized for d in result.descriptors.source)).lower()))
    if result.curve is not None:
        rows.append(("mean_error", f"{result.curve.mean:.17g}"))
        rows.append(("median_error", f"{result.curve.median:.17g}"))
    with open(path, "w") as fh:
        fh.write("key,value\n")
        for key, val in rows:
            fh.write(f"{key},{val}\n")


def sweep_descriptors(cfg, methods=None, write=True):
    """Mean error per (method, descriptor count) over a shared budget.

    Landmarks are FPS-ordered once on the source and shared across
    methods; each cell runs the full pipeline with the first ``count``
    of them. A failed cell records NaN and the sweep continues.
    """
    methods = list(methods) if methods is not None else list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if not cfg.counts:
        raise ValueError("sweep needs a non-empty counts grid")

    table = {}
    failures = {}
    for method in methods:
        for count in cfg.counts:
            cell = ExperimentConfig(
                source=cfg.source, target=cfg.target,
                ground_truth=cfg.ground_truth, method=method,
                descriptor_source=cfg.descriptor_source,
                n_descriptors=count, counts=cfg.counts,
                landmarks=cfg.landmarks,
                descriptor_x=cfg.descriptor_x, descriptor_y=cfg.descriptor_y,
                out=os.path.join(cfg.out, f"cell-{method}-{count:03d}"),
                seed=cfg.seed, cache_basis=cfg.cache_basis, solver=cfg.solver,
            )
            try:
                result = run_pipeline(cell, write=write)
                if result.curve is None:
                    raise ValidationError("sweep cells need ground truth to score")
                table[(method, count)] = result.curve.mean
            except ShapeCorrError as exc:
                table[(method, count)] = float("nan")
                failures[(method, count)] = str(exc)
    if write:
        os.makedirs(cfg.out, exist_ok=True)
        write_sweep_csv(os.path.join(cfg.out, "sweep.csv"), table, failures)
        figures.plot_sweep(table, os.path.join(cfg.out, "sweep.png"))
    return table


def write_sweep_csv(path, table, failures=None):
    failures = failures or {}
    with open(path, "w") as fh:
        fh.write("method,count,mean_error,note\n")
        for method, count in sorted(table, key=lambda mc: (mc[0], mc[1])):
            err = table[(method, count)]
            note = failures.get((method, count), "")
            fh.write(f"{method},{count},{err:.17g},{note}\n")


def kernel_eigenfields(mesh, basis, landmark, sigma, sigma_d=None, n0=100,
                       n_fields=4):
    """Leading eigenfunctions of a landmark descriptor kernel, as fields.

    Eigenvectors of the spectral kernel image (eigenvalues descending)
    are lifted back to per-vertex fields. The first field is returned
    too, but the interesting structure starts at the second: fields
    cluster regions of similar descriptor value.
    """
    descriptor = normalize_descriptor(gaussian_landmark(mesh, landmark, sigma_d))
    kernel = DescriptorKernel(descriptor.values, sigma)
    samples = farthest_point_sampling(mesh, min(n0, mesh.n_vertices),
                                      seed_vertex=NYSTROM_SEED_VERTEX)
    op = spectral_kernel(nystrom_factors(kernel, basis, samples))
    evals, evecs = np.linalg.eigh(op.matrix)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    fields = basis.eigenfunctions @ evecs[:, :n_fields + 1]
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(fields), axis=0)
    signs = np.sign(fields[idx, np.arange(fields.shape[1])])
    signs[signs == 0] = 1.0
    fields = fields * signs[None, :]
    return descriptor, evals[:n_fields + 1], fields
