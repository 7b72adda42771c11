"""Experiment configuration: INI files, defaults, CLI overrides.

Config files are flat ``key = value`` pairs under square-bracket sections
([pair], [solver], [experiment]). Every key has a default; values given
on the command line override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .solver import SolverConfig

METHODS = ("plain-fmap", "diagonal", "bilateral")
DESCRIPTOR_SOURCES = ("gaussian-landmark", "wks", "external")

# every config key with its default and section
DEFAULTS = {
    "pair": {
        "source": "",            # source mesh file (OFF/PLY)
        "target": "",            # target mesh file
        "ground_truth": "",      # target index per source-vertex line
    },
    "solver": {
        "k": "60",               # basis size
        "alpha": "1.0",          # commutator weight
        "t": "1e-3",             # heat diffusion time
        "sigma": "3.0",          # descriptor-kernel bandwidth
        "gamma": "1.0",          # kernel mixing weight
        "sigma_d": "",           # landmark width; empty = 0.05 x diameter
        "n0": "100",             # kernel sample columns
        "icp_iterations": "10",
        "cg_tol": "1e-8",
        "cg_maxiter": "20000",
    },
    "experiment": {
        "method": "bilateral",             # plain-fmap | diagonal | bilateral
        "descriptor_source": "gaussian-landmark",  # | wks | external
        "n_descriptors": "5",              # descriptors for a single run
        "counts": "2,4,6,10",              # sweep budget grid
        "landmarks": "",                   # file of "src tgt" pairs; empty = FPS
        "descriptor_x": "",                # external descriptor files, comma-
        "descriptor_y": "",                #   separated, one per descriptor
        "out": "results",
        "seed": "0",
        "cache_basis": "false",
    },
}


@dataclass
class ExperimentConfig:
    """Fully resolved settings of one experiment."""

    source: str = ""
    target: str = ""
    ground_truth: str = ""
    method: str = "bilateral"
    descriptor_source: str = "gaussian-landmark"
    n_descriptors: int = 5
    counts: tuple = (2, 4, 6, 10)
    landmarks: str = ""
    descriptor_x: tuple = ()
    descriptor_y: tuple = ()
    out: str = "results"
    seed: int = 0
    cache_basis: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.descriptor_source not in DESCRIPTOR_SOURCES:
            raise ValueError(
                f"unknown descriptor source {self.descriptor_source!r}; "
                f"expected one of {DESCRIPTOR_SOURCES}"
            )
        counts = tuple(int(c) for c in self.counts)
        if counts and (any(c <= 0 for c in counts) or list(counts) != sorted(counts)):
            raise ValueError(f"descriptor counts must be positive ascending, got {counts}")
        self.counts = counts


def _parse_bool(text):
    return text.strip().lower() in ("1", "true", "yes", "on")


def _split_list(text):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def load_config(path=None, overrides=None):
    """Resolve an ExperimentConfig from defaults, a file, and overrides.

    ``overrides`` maps flat keys (as in DEFAULTS sections) to strings;
    None values are ignored.
    """
    values = {key: val for section in DEFAULTS.values() for key, val in section.items()}
    if path:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        with open(path, "r") as fh:
            parser.read_file(fh)
        for section in parser.sections():
            if section not in DEFAULTS:
                raise ValueError(f"{path}: unknown config section [{section}]")
            for key, val in parser[section].items():
                if key not in DEFAULTS[section]:
                    raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
                values[key] = val
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in values:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = str(val)

    solver = SolverConfig(
        k=int(values["k"]),
        alpha=float(values["alpha"]),
        t=float(values["t"]),
        sigma=float(values["sigma"]),
        gamma=float(values["gamma"]),
        sigma_d=float(values["sigma_d"]) if values["sigma_d"] else None,
        n0=int(values["n0"]),
        icp_iterations=int(values["icp_iterations"]),
        cg_tol=float(values["cg_tol"]),
        cg_maxiter=int(values["cg_maxiter"]),
    )
    return ExperimentConfig(
        source=values["source"],
        target=values["target"],
        ground_truth=values["ground_truth"],
        method=values["method"],
        descriptor_source=values["descriptor_source"],
        n_descriptors=int(values["n_descriptors"]),
        counts=tuple(int(c) for c in _split_list(values["counts"])),
        landmarks=values["landmarks"],
        descriptor_x=_split_list(values["descriptor_x"]),
        descriptor_y=_split_list(values["descriptor_y"]),
        out=values["out"],
        seed=int(values["seed"]),
        cache_basis=_parse_bool(values["cache_basis"]),
        solver=solver,
    )


def config_rows(cfg):
    """Flatten a config to (key, value) rows for the run record.

    The output directory is omitted: it is wherever the record lives and
    would make otherwise-identical runs differ.
    """
    rows = []
    for f in fields(cfg):
        if f.name in ("solver", "out"):
            continue
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        rows.append((f.name, str(val)))
    for f in fields(cfg.solver):
        rows.append((f.name, str(getattr(cfg.solver, f.name))))
    return rows
