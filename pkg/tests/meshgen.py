"""Synthetic meshes for the test suite.

All generators are deterministic. Closed surfaces (icosphere, torus) are
used wherever spectral quantities matter; the small open strips exercise
edge cases of the discrete operators.
"""

import numpy as np

from shapecorr.mesh import TriangleMesh

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def equilateral_triangle():
    """Single equilateral triangle with unit edges."""
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.5, np.sqrt(3.0) / 2.0, 0.0],
    ])
    faces = np.array([[0, 1, 2]])
    return TriangleMesh(verts, faces)


def two_triangle_strip(length=2.0, width=1.0):
    """A rectangle of given length split into two triangles."""
    verts = np.array([
        [0.0, 0.0, 0.0],
        [length, 0.0, 0.0],
        [length, width, 0.0],
        [0.0, width, 0.0],
    ])
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return TriangleMesh(verts, faces)


def path_strip(n_line=3, height=0.1):
    """Collinear vertices spaced 1 apart, plus near-line apex vertices.

    The first ``n_line`` vertices lie on the x axis; graph distances
    between them equal their index differences because the apex detours
    are strictly longer.
    """
    line = np.array([[float(i), 0.0, 0.0] for i in range(n_line)])
    apex = np.array([[i + 0.5, height, 0.0] for i in range(n_line - 1)])
    verts = np.vstack([line, apex])
    faces = []
    for i in range(n_line - 1):
        faces.append([i, i + 1, n_line + i])
    for i in range(n_line - 2):
        faces.append([n_line + i, i + 1, n_line + i + 1])
    return TriangleMesh(verts, np.array(faces))


def icosahedron(scale=1.0):
    """Regular icosahedron: 12 vertices, 20 faces, edge 2*scale."""
    a, b = 1.0, GOLDEN
    verts = np.array([
        [-a, b, 0], [a, b, 0], [-a, -b, 0], [a, -b, 0],
        [0, -a, b], [0, a, b], [0, -a, -b], [0, a, -b],
        [b, 0, -a], [b, 0, a], [-b, 0, -a], [-b, 0, a],
    ], dtype=np.float64) * scale
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return TriangleMesh(verts, faces)


def icosahedron_edge(scale=1.0):
    return 2.0 * scale


def icosphere(subdivisions=2, radius=1.0):
    """Icosahedron subdivided and projected onto a sphere."""
    base = icosahedron()
    verts = base.vertices / np.linalg.norm(base.vertices, axis=1, keepdims=True)
    faces = base.faces
    for _ in range(subdivisions):
        edge_mid = {}
        new_faces = []
        verts = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = verts[i] + verts[j]
                m = m / np.linalg.norm(m)
                edge_mid[key] = len(verts)
                verts.append(m)
            return edge_mid[key]

        for f in faces:
            a, b, c = (int(v) for v in f)
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        verts = np.array(verts)
        faces = np.array(new_faces)
    return TriangleMesh(verts * radius, faces)


def bumpy_sphere(subdivisions=2, axes=(1.0, 1.15, 0.87), bump=0.05, waves=(3, 2)):
    """Ellipsoidal icosphere with a smooth radial bump field.

    The bumps break all symmetries, giving a generically simple spectrum;
    useful where permuted copies must reproduce eigenbases up to sign.
    """
    base = icosphere(subdivisions)
    v = base.vertices
    theta = np.arctan2(v[:, 1], v[:, 0])
    phi = np.arccos(np.clip(v[:, 2], -1, 1))
    r = 1.0 + bump * np.sin(waves[0] * theta) * np.cos(waves[1] * phi)
    verts = v * r[:, None] * np.asarray(axes)[None, :]
    return TriangleMesh(verts, base.faces)


def torus(nu=24, nv=24, major=1.0, minor=0.4, bump=0.0):
    """Regular torus grid; optional radial bumps to break symmetry."""
    iu, iv = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    u = 2 * np.pi * iu.ravel() / nu
    v = 2 * np.pi * iv.ravel() / nv
    r = minor * (1.0 + bump * np.sin(3 * u) * np.cos(2 * v))
    x = (major + r * np.cos(v)) * np.cos(u)
    y = (major + r * np.cos(v)) * np.sin(u)
    z = r * np.sin(v)
    verts = np.stack([x, y, z], axis=1)
    faces = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            faces.append([a, b, c])
            faces.append([a, c, d])
    return TriangleMesh(verts, np.array(faces))


def bent_copy(mesh, amount=0.35):
    """Near-isometric deformation: twist about the z axis with height.

    Each vertex is rotated in the xy plane by an angle proportional to
    its z coordinate; small amounts approximately preserve the metric.
    """
    v = mesh.vertices.copy()
    ang = amount * v[:, 2]
    ca, sa = np.cos(ang), np.sin(ang)
    x = ca * v[:, 0] - sa * v[:, 1]
    y = sa * v[:, 0] + ca * v[:, 1]
    out = np.stack([x, y, v[:, 2]], axis=1)
    return TriangleMesh(out, mesh.faces.copy())


def irregular_octahedron():
    """Six vertices, eight faces, no symmetries (distinct axis scales)."""
    verts = np.array([
        [1.05, 0.0, 0.0], [-0.95, 0.0, 0.0],
        [0.0, 1.3, 0.0], [0.0, -1.2, 0.0],
        [0.0, 0.0, 0.8], [0.0, 0.0, -0.7],
    ])
    faces = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
    ])
    return TriangleMesh(verts, faces)


def permuted_copy(mesh, rng):
    """Relabeled copy plus the ground-truth map old index -> new index."""
    n = mesh.n_vertices
    perm = rng.permutation(n)  # perm[old] = new
    verts = np.empty_like(mesh.vertices)
    verts[perm] = mesh.vertices
    faces = perm[mesh.faces]
    return TriangleMesh(verts, faces), perm


def write_off(path, mesh):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def write_ply_ascii(path, mesh):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write(f"element face {mesh.n_faces}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def write_ply_binary(path, mesh):
    import struct

    with open(path, "wb") as fh:
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {mesh.n_vertices}\n"
            "property float x\nproperty float y\nproperty float z\n"
            f"element face {mesh.n_faces}\n"
            "property list uchar int vertex_indices\nend_header\n"
        )
        fh.write(header.encode("ascii"))
        for v in mesh.vertices:
            fh.write(struct.pack("<3f", *v))
        for f in mesh.faces:
            fh.write(struct.pack("<B3i", 3, *f))
