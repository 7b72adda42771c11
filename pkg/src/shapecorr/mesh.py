"""Triangle-mesh ingestion and discrete differential geometry.

Meshes are loaded from ASCII OFF or PLY (ASCII / binary little-endian)
files and validated on load: face indices in range, no degenerate faces,
single connected component. Derived quantities (face areas, lumped mass,
cotangent stiffness, edge graph) are cached lazily; once populated a mesh
is treated as immutable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import DisconnectedError, ParseError, ValidationError

# Faces with area below this fraction of the mean face area are rejected:
# cotangent weights blow up on slivers.
DEGENERATE_AREA_FRACTION = 1e-12


@dataclass
class GeodesicField:
    """Geodesic distances from one source vertex to every vertex."""

    source: int
    distances: np.ndarray
    method: str = "dijkstra"


class TriangleMesh:
    """A connected, validated triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
        Vertex positions.
    faces : (m, 3) int array
        Vertex-index triples.
    validate : bool
        Run structural validation (index range, degenerate faces,
        connectivity). Only disable for meshes already validated.
    """

    def __init__(self, vertices, faces, validate=True):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError("vertices must be an (n, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValidationError("faces must be an (m, 3) array")
        self._face_areas = None
        self._mass = None
        self._stiffness = None
        self._edge_graph = None
        self._adjacency = None
        self._diameter = None
        if validate:
            self._validate()

    # ------------------------------------------------------------------
    # structure
    # ------------------------------------------------------------------

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    def _validate(self):
        n = self.n_vertices
        if self.n_faces == 0:
            raise ValidationError("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= n:
            raise ValidationError(
                f"face index out of range [0, {n}): "
                f"min {self.faces.min()}, max {self.faces.max()}"
            )
        same = (
            (self.faces[:, 0] == self.faces[:, 1])
            | (self.faces[:, 1] == self.faces[:, 2])
            | (self.faces[:, 2] == self.faces[:, 0])
        )
        if same.any():
            raise ValidationError(
                f"face {int(np.nonzero(same)[0][0])} repeats a vertex index"
            )
        areas = self.face_areas
        tiny = areas < DEGENERATE_AREA_FRACTION * areas.mean()
        if tiny.any():
            raise ValidationError(
                f"face {int(np.nonzero(tiny)[0][0])} is degenerate "
                f"(area {areas[tiny][0]:.3e})"
            )
        n_comp, _ = csgraph.connected_components(self.adjacency, directed=False)
        if n_comp != 1:
            raise ValidationError(f"mesh has {n_comp} connected components")

    @property
    def face_areas(self):
        """Per-face areas from edge cross products."""
        if self._face_areas is None:
            e1 = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
            e2 = self.vertices[self.faces[:, 2]] - self.vertices[self.faces[:, 0]]
            self._face_areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
        return self._face_areas

    @property
    def area(self):
        """Total surface area."""
        return float(self.face_areas.sum())

    @property
    def adjacency(self):
        """Symmetric 0/1 vertex adjacency (csr)."""
        if self._adjacency is None:
            i, j = _edge_endpoints(self.faces)
            ones = np.ones(i.shape[0])
            n = self.n_vertices
            adj = sp.csr_matrix((ones, (i, j)), shape=(n, n))
            adj.data[:] = 1.0
            self._adjacency = adj
        return self._adjacency

    @property
    def edge_graph(self):
        """Vertex graph weighted by Euclidean edge lengths (csr)."""
        if self._edge_graph is None:
            i, j = _edge_endpoints(self.faces)
            w = np.linalg.norm(self.vertices[i] - self.vertices[j], axis=1)
            n = self.n_vertices
            # duplicate (i, j) entries are summed on conversion; divide by
            # the multiplicity to recover the (identical) edge length
            g = sp.csr_matrix((w, (i, j)), shape=(n, n))
            counts = sp.csr_matrix((np.ones_like(w), (i, j)), shape=(n, n))
            g.data = g.data / counts.data
            self._edge_graph = g
        return self._edge_graph

    @property
    def mass(self):
        if self._mass is None:
            self._mass = barycentric_mass(self)
        return self._mass

    @property
    def stiffness(self):
        if self._stiffness is None:
            self._stiffness = cotangent_stiffness(self)
        return self._stiffness

    @property
    def diameter(self):
        if self._diameter is None:
            self._diameter = mesh_diameter(self)
        return self._diameter

    def one_ring(self, vertex):
        """Indices of the vertices sharing an edge with ``vertex``."""
        row = self.adjacency.getrow(int(vertex))
        return row.indices


def _edge_endpoints(faces):
    """All directed half edges (i, j) of the face list."""
    i = np.concatenate([faces[:, 0], faces[:, 1], faces[:, 2],
                        faces[:, 1], faces[:, 2], faces[:, 0]])
    j = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0],
                        faces[:, 0], faces[:, 1], faces[:, 2]])
    return i, j


# ----------------------------------------------------------------------
# file loading
# ----------------------------------------------------------------------


def load_mesh(path, fmt=None):
    """Load and validate a triangle mesh from an OFF or PLY file.

    Parameters
    ----------
    path : str or Path
        Mesh file. ASCII OFF, ASCII PLY and binary little-endian PLY
        are supported.
    fmt : {"off", "ply", None}
        File format; inferred from the extension when None.

    Returns
    -------
    TriangleMesh

    Raises
    ------
    ParseError
        Malformed file.
    ValidationError
        Out-of-range index, degenerate face or disconnected mesh.
    """
    path = str(path)
    if fmt is None:
        lowered = path.lower()
        if lowered.endswith(".off"):
            fmt = "off"
        elif lowered.endswith(".ply"):
            fmt = "ply"
        else:
            raise ParseError(f"cannot infer mesh format from path {path!r}")
    fmt = fmt.lower()
    try:
        if fmt == "off":
            vertices, faces = _read_off(path)
        elif fmt == "ply":
            vertices, faces = _read_ply(path)
        else:
            raise ParseError(f"unsupported mesh format {fmt!r}")
    except OSError as exc:
        raise ParseError(f"cannot read mesh file: {exc}") from exc
    return TriangleMesh(vertices, faces)


def _read_off(path):
    with open(path, "r") as fh:
        text = fh.read()
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError(f"{path}: missing OFF header")
    tokens = tokens[1:]
    try:
        nv, nf = int(tokens[0]), int(tokens[1])
        pos = 3  # vertex, face, edge counts
        flat = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64)
        vertices = flat.reshape(nv, 3)
        pos += 3 * nv
        faces = np.empty((nf, 3), dtype=np.int64)
        for f in range(nf):
            cnt = int(tokens[pos])
            if cnt != 3:
                raise ParseError(f"{path}: face {f} has {cnt} vertices (triangles only)")
            faces[f] = [int(t) for t in tokens[pos + 1:pos + 4]]
            pos += 1 + cnt
    except ParseError:
        raise
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed OFF file ({exc})") from exc
    return vertices, faces


_PLY_TYPES = {
    "char": "b", "int8": "b",
    "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h",
    "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i",
    "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


def _read_ply(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    # header is always ASCII, terminated by end_header
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise ParseError(f"{path}: not a PLY file")
    end = raw.index(b"\n", end) + 1
    header = raw[:end].decode("ascii", errors="replace").splitlines()
    body = raw[end:]

    fmt = None
    elements = []  # (name, count, [(kind, ...), ...])
    for line in header[1:]:
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError(f"{path}: property before element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append(("scalar", parts[1], parts[2]))
        elif parts[0] == "end_header":
            break
    if fmt == "ascii":
        return _parse_ply_ascii(path, body, elements)
    if fmt == "binary_little_endian":
        return _parse_ply_binary(path, body, elements)
    raise ParseError(f"{path}: unsupported PLY format {fmt!r}")


def _extract_vertex_face(path, records):
    if "vertex" not in records or "face" not in records:
        raise ParseError(f"{path}: PLY needs vertex and face elements")
    vlist, vprops = records["vertex"]
    try:
        cols = [vprops.index(name) for name in ("x", "y", "z")]
    except ValueError as exc:
        raise ParseError(f"{path}: vertex element lacks x/y/z") from exc
    vertices = np.array([[row[c] for c in cols] for row in vlist], dtype=np.float64)
    flist, fprops = records["face"]
    list_name = None
    for cand in ("vertex_indices", "vertex_index"):
        if cand in fprops:
            list_name = cand
            break
    if list_name is None:
        raise ParseError(f"{path}: face element lacks vertex_indices")
    col = fprops.index(list_name)
    faces = []
    for i, row in enumerate(flist):
        idx = row[col]
        if len(idx) != 3:
            raise ParseError(f"{path}: face {i} has {len(idx)} vertices (triangles only)")
        faces.append(idx)
    return vertices, np.array(faces, dtype=np.int64)


def _parse_ply_ascii(path, body, elements):
    lines = [ln.split() for ln in body.decode("ascii", errors="replace").splitlines()
             if ln.strip() and not ln.startswith("comment")]
    pos = 0
    records = {}
    try:
        for name, count, props in elements:
            rows = []
            for _ in range(count):
                tokens = lines[pos]
                pos += 1
                row = []
                ti = 0
                for p in props:
                    if p[0] == "scalar":
                        conv = float if p[1] in ("float", "float32", "double", "float64") else int
                        row.append(conv(tokens[ti]))
                        ti += 1
                    else:
                        cnt = int(tokens[ti])
                        ti += 1
                        row.append([int(t) for t in tokens[ti:ti + cnt]])
                        ti += cnt
                rows.append(row)
            records[name] = (rows, [p[-1] for p in props])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed ASCII PLY ({exc})") from exc
    return _extract_vertex_face(path, records)


def _parse_ply_binary(path, body, elements):
    offset = 0
    records = {}
    try:
        for name, count, props in elements:
            rows = []
            for _ in range(count):
                row = []
                for p in props:
                    if p[0] == "scalar":
                        code = _PLY_TYPES[p[1]]
                        size = struct.calcsize(code)
                        (val,) = struct.unpack_from("<" + code, body, offset)
                        offset += size
                        row.append(val)
                    else:
                        ccode = _PLY_TYPES[p[1]]
                        icode = _PLY_TYPES[p[2]]
                        (cnt,) = struct.unpack_from("<" + ccode, body, offset)
                        offset += struct.calcsize(ccode)
                        vals = struct.unpack_from("<" + str(cnt) + icode, body, offset)
                        offset += cnt * struct.calcsize(icode)
                        row.append(list(vals))
                rows.append(row)
            records[name] = (rows, [p[-1] for p in props])
    except (struct.error, KeyError) as exc:
        raise ParseError(f"{path}: malformed binary PLY ({exc})") from exc
    return _extract_vertex_face(path, records)


# ----------------------------------------------------------------------
# differential geometry matrices
# ----------------------------------------------------------------------


def cotangent_stiffness(mesh):
    """Cotangent-weight stiffness matrix L (sparse, symmetric, PSD).

    Off-diagonal entry for edge (i, j) is -(cot a + cot b)/2 over the
    incident triangles; the diagonal makes every row sum to zero, so
    constant functions lie in the kernel. Obtuse triangles yield negative
    weights and are kept as-is.
    """
    verts, faces = mesh.vertices, mesh.faces
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for c in range(3):
        i = faces[:, (c + 1) % 3]
        j = faces[:, (c + 2) % 3]
        k = faces[:, c]
        u = verts[i] - verts[k]
        w = verts[j] - verts[k]
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        cot = (u * w).sum(axis=1) / cross
        half = cot / 2.0
        rows.extend([i, j, i, j])
        cols.extend([j, i, i, j])
        vals.extend([-half, -half, half, half])
    L = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    L = (L + L.T) * 0.5  # exact symmetry despite float summation order
    return L


def barycentric_mass(mesh):
    """Lumped per-vertex areas: one third of the incident face areas.

    Returns the diagonal as a 1-D array; ``sp.diags`` of it is the mass
    matrix. Its sum equals the total surface area.
    """
    areas = mesh.face_areas
    m = np.zeros(mesh.n_vertices)
    for c in range(3):
        np.add.at(m, mesh.faces[:, c], areas / 3.0)
    return m


# ----------------------------------------------------------------------
# geodesics and sampling
# ----------------------------------------------------------------------


def geodesic_distances(mesh, source):
    """Dijkstra distances on the edge graph from ``source``.

    Returns a GeodesicField; raises DisconnectedError if any vertex is
    unreachable (cannot happen for meshes validated at load).
    """
    d = csgraph.dijkstra(mesh.edge_graph, directed=False, indices=int(source))
    if np.isinf(d).any():
        raise DisconnectedError(f"vertex unreachable from source {source}")
    return GeodesicField(source=int(source), distances=d)


def geodesic_distance_matrix(mesh, sources):
    """Dijkstra distances from several sources at once, (|sources|, n)."""
    sources = np.asarray(sources, dtype=np.int64)
    d = csgraph.dijkstra(mesh.edge_graph, directed=False, indices=sources)
    if np.isinf(d).any():
        raise DisconnectedError("vertex unreachable from a source")
    return d


def farthest_point_sampling(mesh, n0, seed_vertex=0):
    """Greedy geodesic farthest-point sampling.

    The first sample is ``seed_vertex``; each next sample maximizes the
    minimum geodesic distance to all previous ones, ties broken by lowest
    vertex index.
    """
    n = mesh.n_vertices
    if not 1 <= n0 <= n:
        raise ValueError(f"n0 must be in [1, {n}], got {n0}")
    selected = [int(seed_vertex)]
    min_dist = geodesic_distances(mesh, seed_vertex).distances.copy()
    for _ in range(n0 - 1):
        nxt = int(np.argmax(min_dist))  # argmax takes the lowest index on ties
        selected.append(nxt)
        np.minimum(min_dist, geodesic_distances(mesh, nxt).distances, out=min_dist)
    return np.array(selected, dtype=np.int64)


def mesh_diameter(mesh, n_sources=50, seed_vertex=0):
    """Geodesic diameter estimated over a farthest-point source subset.

    Deterministic: sources are FPS-ordered from ``seed_vertex``. Exact
    when ``n_sources >= n``.
    """
    sources = farthest_point_sampling(mesh, min(n_sources, mesh.n_vertices),
                                      seed_vertex=seed_vertex)
    d = geodesic_distance_matrix(mesh, sources)
    return float(d.max())


# ----------------------------------------------------------------------
# correspondence files
# ----------------------------------------------------------------------


def read_correspondence(path, n_target=None):
    """Read a vertex map: one 0-based target index per source-vertex line."""
    with open(path, "r") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        targets = np.array([int(ln) for ln in lines], dtype=np.int64)
    except ValueError as exc:
        raise ParseError(f"{path}: malformed correspondence file ({exc})") from exc
    if n_target is not None and ((targets < 0) | (targets >= n_target)).any():
        raise ValidationError(f"{path}: target index out of range [0, {n_target})")
    return targets


def write_correspondence(path, targets):
    with open(path, "w") as fh:
        for t in np.asarray(targets, dtype=np.int64):
            fh.write(f"{int(t)}\n")
