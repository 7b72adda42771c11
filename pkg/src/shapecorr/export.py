"""Scalar-field export: colored PLY plus a sidecar file of raw values."""

from __future__ import annotations

import numpy as np
from matplotlib import colormaps

from .errors import DimensionError


def _viridis_bytes(field):
    lo = float(field.min())
    hi = float(field.max())
    if hi - lo <= 0:
        unit = np.full(field.shape[0], 0.5)
    else:
        unit = (field - lo) / (hi - lo)
    rgba = colormaps["viridis"](unit)
    return (rgba[:, :3] * 255).round().astype(np.uint8)


def export_scalar_field(mesh, field, path):
    """Write a per-vertex field as a vertex-colored ASCII PLY.

    Colors follow a viridis ramp over [min, max] (mid-ramp for constant
    fields). Raw values go to a sidecar next to the PLY, one float per
    vertex line, re-loadable as an external descriptor.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape[0] != mesh.n_vertices:
        raise DimensionError(
            f"field has {field.shape[0]} values, mesh has {mesh.n_vertices} vertices"
        )
    colors = _viridis_bytes(field)
    path = str(path)
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write(f"element face {mesh.n_faces}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for v, c in zip(mesh.vertices, colors):
            fh.write(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g} {c[0]} {c[1]} {c[2]}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    sidecar = _sidecar_path(path)
    with open(sidecar, "w") as fh:
        for v in field:
            fh.write(f"{v:.17g}\n")
    return sidecar


def _sidecar_path(path):
    return (path[:-4] if path.lower().endswith(".ply") else path) + ".csv"


def read_sidecar(path):
    with open(path, "r") as fh:
        return np.array([float(ln) for ln in fh if ln.strip()])
