"""Benchmark command line.

Subcommands: ``correspond`` (solve one pair), ``sweep`` (error vs
descriptor budget), ``eval`` (score an existing map file), ``export-eig``
(descriptor-kernel eigenfunction fields). Flags override config-file
values; see ``shapecorr <cmd> --help``.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import figures
from .config import DESCRIPTOR_SOURCES, METHODS, load_config
from .errors import ShapeCorrError
from .evaluate import geodesic_error
from .export import export_scalar_field
from .mesh import load_mesh, read_correspondence
from .pipeline import (
    kernel_eigenfields,
    run_pipeline,
    shape_basis,
    sweep_descriptors,
    write_error_csvs,
)


def _add_common(parser, include_pair=True):
    parser.add_argument("--config", help="INI config file; flags override it")
    if include_pair:
        parser.add_argument("--source", help="source mesh (OFF or PLY)")
        parser.add_argument("--target", help="target mesh (OFF or PLY)")
        parser.add_argument("--ground-truth", dest="ground_truth",
                            help="target index per source-vertex line")
    parser.add_argument("--k", type=int, help="basis size")
    parser.add_argument("--alpha", type=float, help="commutator weight")
    parser.add_argument("--t", type=float, help="heat diffusion time")
    parser.add_argument("--sigma", type=float, help="descriptor-kernel bandwidth")
    parser.add_argument("--gamma", type=float, help="kernel mixing weight")
    parser.add_argument("--sigma-d", dest="sigma_d", type=float,
                        help="landmark width (default 0.05 x diameter)")
    parser.add_argument("--n0", type=int, help="kernel sample columns")
    parser.add_argument("--landmarks", help="file of 'src tgt' pairs")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="landmark sampling seed")


def _overrides(args):
    keys = ("source", "target", "ground_truth", "method", "descriptor_source",
            "n_descriptors", "counts", "landmarks", "out", "seed",
            "k", "alpha", "t", "sigma", "gamma", "sigma_d", "n0",
            "icp_iterations")
    return {key: getattr(args, key, None) for key in keys}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="shapecorr",
        description="Spectral shape correspondence with pairwise kernel operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correspond", help="solve a single shape pair")
    _add_common(p)
    p.add_argument("--method", choices=METHODS, help="correspondence method")
    p.add_argument("--descriptor-source", dest="descriptor_source",
                   choices=DESCRIPTOR_SOURCES)
    p.add_argument("--n-descriptors", dest="n_descriptors", type=int,
                   help="descriptor budget")
    p.add_argument("--icp-iterations", dest="icp_iterations", type=int)

    p = sub.add_parser("sweep", help="error vs descriptor count per method")
    _add_common(p)
    p.add_argument("--counts", help="comma-separated ascending budgets")
    p.add_argument("--methods", help="comma-separated subset of methods")
    p.add_argument("--method", choices=METHODS,
                   help="sweep a single method (shorthand for --methods)")
    p.add_argument("--icp-iterations", dest="icp_iterations", type=int)

    p = sub.add_parser("eval", help="score an existing map file")
    _add_common(p)
    p.add_argument("--map", required=True, help="predicted map file to score")

    p = sub.add_parser("export-eig", help="export descriptor-kernel eigenfields")
    _add_common(p, include_pair=False)
    p.add_argument("--source", help="mesh to analyze")
    p.add_argument("--landmark", type=int, default=None,
                   help="landmark vertex (default: first landmark-file entry, else 0)")
    p.add_argument("--n-fields", dest="n_fields", type=int, default=4)
    return parser


def cmd_correspond(args):
    cfg = load_config(args.config, _overrides(args))
    result = run_pipeline(cfg)
    if result.curve is not None:
        print(f"mean error {result.curve.mean:.6f}  "
              f"median {result.curve.median:.6f}")
    print(f"artifacts in {cfg.out}")
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config, _overrides(args))
    methods = None
    if args.methods:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    elif args.method:
        methods = [args.method]
    table = sweep_descriptors(cfg, methods=methods)
    for (method, count) in sorted(table):
        print(f"{method:12s} n={count:<4d} mean error {table[(method, count)]:.6f}")
    print(f"artifacts in {cfg.out}")
    return 0


def cmd_eval(args):
    cfg = load_config(args.config, _overrides(args))
    mesh_y = load_mesh(cfg.target)
    predicted = read_correspondence(args.map, n_target=mesh_y.n_vertices)
    truth = read_correspondence(cfg.ground_truth, n_target=mesh_y.n_vertices)
    curve = geodesic_error(predicted, truth, mesh_y)
    os.makedirs(cfg.out, exist_ok=True)
    write_error_csvs(cfg.out, curve)
    figures.plot_error_curve(curve, os.path.join(cfg.out, "curve.png"))
    print(f"mean error {curve.mean:.6f}  median {curve.median:.6f}")
    print(f"artifacts in {cfg.out}")
    return 0


def cmd_export_eig(args):
    cfg = load_config(args.config, _overrides(args))
    mesh = load_mesh(cfg.source)
    basis = shape_basis(mesh, cfg.solver.k, cfg.source, cfg.cache_basis)
    landmark = args.landmark
    if landmark is None:
        if cfg.landmarks:
            from .descriptors import read_landmark_pairs
            landmark = read_landmark_pairs(cfg.landmarks)[0][0]
        else:
            landmark = 0
    descriptor, evals, fields = kernel_eigenfields(
        mesh, basis, landmark, cfg.solver.sigma, cfg.solver.sigma_d,
        cfg.solver.n0, n_fields=args.n_fields,
    )
    os.makedirs(cfg.out, exist_ok=True)
    export_scalar_field(mesh, descriptor.values,
                        os.path.join(cfg.out, "descriptor.ply"))
    figures.plot_field(mesh, descriptor.values,
                       os.path.join(cfg.out, "descriptor.png"), title="descriptor")
    # eigenfield numbering starts at 1 = dominant; fields 2..n are exported
    for i in range(1, fields.shape[1]):
        name = f"eigenfield-{i + 1:02d}"
        export_scalar_field(mesh, fields[:, i],
                            os.path.join(cfg.out, name + ".ply"))
        figures.plot_field(mesh, fields[:, i],
                           os.path.join(cfg.out, name + ".png"), title=name)
    with open(os.path.join(cfg.out, "eigenvalues.csv"), "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, ev in enumerate(evals):
            fh.write(f"{i + 1},{ev:.17g}\n")
    print(f"{fields.shape[1] - 1} eigenfields in {cfg.out}")
    return 0


_COMMANDS = {
    "correspond": cmd_correspond,
    "sweep": cmd_sweep,
    "eval": cmd_eval,
    "export-eig": cmd_export_eig,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ShapeCorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
