"""Bundled mesh corpus: generators for the test and demo meshes.

All generators return closed or open `QuadMesh` instances with consistent
counterclockwise orientation.  Connectivity edits (edge rotation) only touch
the face table; vertex positions are left untouched so mixed-valence meshes
stay geometrically identical to their torus-grid parent.
"""

from __future__ import annotations

import numpy as np

from .quadmesh import MeshError, QuadMesh, save_obj, vertex_star


def cube(size=1.0):
    """The unit(ish) cube: 8 corners of valence 3, 6 quads."""
    s = float(size)
    vertices = np.array([
        [-s, -s, -s], [s, -s, -s], [s, s, -s], [-s, s, -s],
        [-s, -s, s], [s, -s, s], [s, s, s], [-s, s, s],
    ])
    faces = np.array([
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ])
    return QuadMesh(vertices, faces)


def open_grid(nx, ny, spacing=1.0, origin=(0.0, 0.0), height=None):
    """Planar (nx x ny)-quad grid with optional height function z = f(x, y)."""
    xs = origin[0] + spacing * np.arange(nx + 1)
    ys = origin[1] + spacing * np.arange(ny + 1)
    vertices = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            x, y = xs[i], ys[j]
            z = 0.0 if height is None else float(height(x, y))
            vertices.append([x, y, z])

    def vid(i, j):
        return j * (nx + 1) + i

    faces = []
    for j in range(ny):
        for i in range(nx):
            faces.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return QuadMesh(np.array(vertices), np.array(faces))


def torus_grid(nu=4, nv=4, R=2.0, r=1.0):
    """Closed torus-of-revolution grid; every vertex has valence 4."""
    if nu < 3 or nv < 3:
        raise MeshError("torus grid needs at least 3 quads per direction")
    vertices = []
    for i in range(nu):
        theta = 2 * np.pi * i / nu
        for j in range(nv):
            phi = 2 * np.pi * j / nv
            rho = R + r * np.cos(phi)
            vertices.append([rho * np.cos(theta), rho * np.sin(theta), r * np.sin(phi)])

    def vid(i, j):
        return (i % nu) * nv + (j % nv)

    faces = []
    for i in range(nu):
        for j in range(nv):
            faces.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return QuadMesh(np.array(vertices), np.array(faces))


def _subdivide_linear(vertices, faces):
    """One step of linear quad subdivision (midpoints + centroids)."""
    vertices = [np.asarray(p, dtype=float) for p in vertices]
    edge_mid = {}
    new_vertices = list(vertices)

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in edge_mid:
            edge_mid[key] = len(new_vertices)
            new_vertices.append(0.5 * (vertices[a] + vertices[b]))
        return edge_mid[key]

    new_faces = []
    for quad in faces:
        a, b, c, d = (int(x) for x in quad)
        center = len(new_vertices)
        new_vertices.append(0.25 * (vertices[a] + vertices[b] + vertices[c] + vertices[d]))
        mab, mbc = midpoint(a, b), midpoint(b, c)
        mcd, mda = midpoint(c, d), midpoint(d, a)
        new_faces.extend([
            [a, mab, center, mda],
            [b, mbc, center, mab],
            [c, mcd, center, mbc],
            [d, mda, center, mcd],
        ])
    return np.array(new_vertices), np.array(new_faces)


def monkey_saddle(height=0.4):
    """Once-subdivided 6-quad fan sampled from z = Re((x+iy)^3).

    The center keeps valence 6; after subdivision its one-ring vertices are
    interior, so the six center quads can be constructed and verified.
    """
    angles = 2 * np.pi * np.arange(6) / 6
    e = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts2d = [np.zeros(2)]
    pts2d += [e[k] for k in range(6)]
    pts2d += [e[k] + e[(k + 1) % 6] for k in range(6)]
    faces = []
    for k in range(6):
        faces.append([0, 1 + k, 7 + k, 1 + (k + 1) % 6])
    verts = [np.array([p[0], p[1], 0.0]) for p in pts2d]
    verts, faces = _subdivide_linear(verts, faces)
    verts = np.array(verts)
    x, y = verts[:, 0], verts[:, 1]
    verts[:, 2] = height * (x ** 3 - 3.0 * x * y ** 2)
    return QuadMesh(verts, faces)


def star_mesh(n, rng=None, noise=0.25):
    """Open fan around a single interior vertex of valence n (random shape)."""
    if rng is None:
        rng = np.random.default_rng(0)
    angles = 2 * np.pi * np.arange(n) / n
    e = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    verts = [np.array([0.0, 0.0, rng.uniform(-noise, noise) * 0.3])]
    for k in range(n):
        p = e[k] * rng.uniform(1 - noise, 1 + noise)
        verts.append(np.array([p[0], p[1], rng.uniform(-noise, noise)]))
    for k in range(n):
        p = (e[k] + e[(k + 1) % n]) * rng.uniform(1 - noise, 1 + noise)
        verts.append(np.array([p[0], p[1], rng.uniform(-noise, noise)]))
    faces = [[0, 1 + k, 1 + n + k, 1 + (k + 1) % n] for k in range(n)]
    return QuadMesh(np.array(verts), np.array(faces))


# ---------------------------------------------------------------------------
# connectivity edits for the mixed-valence corpus

def rotate_edge(mesh: QuadMesh, a, b):
    """Rotate interior edge (a, b): returns a new QuadMesh.

    The two incident quads are re-split across the other hexagon diagonal.
    Endpoints a, b lose one edge; the two far corners gain one.
    """
    h = mesh.halfedge(a, b)
    if h < 0 or mesh.twin[h] < 0:
        raise MeshError(f"({a}, {b}) is not an interior edge")
    f1 = int(mesh.face_of[h])
    f2 = int(mesh.face_of[mesh.twin[h]])
    q1 = list(mesh.faces[f1])
    q2 = list(mesh.faces[f2])
    i1 = q1.index(a)
    q1 = q1[i1:] + q1[:i1]          # (a, b, c, d)
    i2 = q2.index(b)
    q2 = q2[i2:] + q2[:i2]          # (b, a, e, f)
    _, _, c, d = q1
    _, _, e, f = q2
    if len({a, b, c, d, e, f}) != 6:
        raise MeshError("rotation would create a degenerate quad")
    faces = mesh.faces.copy()
    faces[f1] = [c, d, a, e]
    faces[f2] = [e, f, b, c]
    return QuadMesh(mesh.vertices.copy(), faces)


def _gain_candidates(mesh, target):
    """Interior edges whose rotation increases the valence of `target`."""
    out = []
    for a, b in mesh.interior_edges():
        h = mesh.halfedge(a, b)
        c = mesh.dest(mesh.next[h])
        e = mesh.dest(mesh.next[mesh.twin[h]])
        if target in (c, e) and mesh.valence(a) > 3 and mesh.valence(b) > 3:
            out.append((a, b))
    return out


def grow_valence(mesh: QuadMesh, target, valence):
    """Greedy edge rotations until `target` has the requested valence."""
    while mesh.valence(target) < valence:
        for a, b in _gain_candidates(mesh, target):
            try:
                mesh = rotate_edge(mesh, a, b)
                break
            except MeshError:
                continue
        else:
            raise MeshError(f"cannot grow vertex {target} to valence {valence}")
    return mesh


def mixed_mesh_35():
    """Torus grid with one rotated edge: valences {3, 4, 5}."""
    mesh = torus_grid(4, 4)
    return rotate_edge(mesh, *mesh.interior_edges()[0])


def mixed_mesh_3456():
    """Torus grid pushed to contain a valence-6 vertex (valences 3..6)."""
    mesh = torus_grid(5, 5)
    mesh = rotate_edge(mesh, *mesh.interior_edges()[0])
    fives = [v for v in range(mesh.n_vertices) if mesh.valence(v) == 5]
    return grow_valence(mesh, fives[0], 6)


def mixed_mesh_8():
    """Larger torus grid pushed to contain a valence-8 vertex."""
    mesh = torus_grid(6, 6)
    mesh = rotate_edge(mesh, *mesh.interior_edges()[0])
    fives = [v for v in range(mesh.n_vertices) if mesh.valence(v) == 5]
    return grow_valence(mesh, fives[0], 8)


def corollary1_mesh():
    """Mesh with a 4-valent vertex whose opposite neighbors have valences 4, 3.

    Returns (mesh, vertex).  This is the Corollary-1 counterexample layout:
    a whole-edge linear transition cannot be G1 at such a vertex.
    """
    mesh = mixed_mesh_35()
    for v in range(mesh.n_vertices):
        if mesh.valence(v) != 4 or mesh.is_boundary_vertex(v):
            continue
        star = vertex_star(mesh, v)
        ns = [mesh.valence(u) for u in star.edge_neighbors]
        for k in range(4):
            if {ns[k], ns[(k + 2) % 4]} == {3, 4}:
                return mesh, v
    raise MeshError("corollary-1 configuration not found")


CORPUS = {
    "cube": cube,
    "torus_3x3": lambda: torus_grid(3, 3),
    "torus_4x4": lambda: torus_grid(4, 4),
    "torus_6x6": lambda: torus_grid(6, 6),
    "monkey_saddle": monkey_saddle,
    "mixed_35": mixed_mesh_35,
    "mixed_3456": mixed_mesh_3456,
    "mixed_8": mixed_mesh_8,
    "corollary1": lambda: corollary1_mesh()[0],
}


def write_corpus(dirpath):
    """Write the whole corpus as OBJ files; returns the file list."""
    import os

    os.makedirs(dirpath, exist_ok=True)
    written = []
    for name, gen in CORPUS.items():
        mesh = gen()
        path = os.path.join(dirpath, f"{name}.obj")
        save_obj(path, mesh.vertices, mesh.faces, comment=f"quadspline corpus: {name}")
        written.append(path)
    return written
