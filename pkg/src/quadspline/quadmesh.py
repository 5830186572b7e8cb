"""Manifold quad meshes with half-edge connectivity.

Vertices are 3D points, faces are counterclockwise 4-tuples of vertex
indices (0-based in memory, 1-based in OBJ files).  Connectivity is stored
as flat half-edge arrays: face f owns half-edges 4f..4f+3, half-edge
4f+k runs from faces[f][k] to faces[f][(k+1) % 4].

A mesh is immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Invalid mesh topology, orientation or input file."""


@dataclass(frozen=True)
class VertexStar:
    """Ordered one-ring of an interior vertex.

    Sector k is the face between outgoing edges k and k+1 (counterclockwise
    when faces are counterclockwise seen from outside), so the outgoing edge
    of sector k is the second boundary edge of sector k-1.
    """

    center: int
    valence: int
    edge_neighbors: tuple      # E_k, counterclockwise
    diagonals: tuple           # D_k, the vertex opposite center in sector k
    faces: tuple               # sector face indices
    halfedges: tuple           # outgoing half-edge ids, halfedges[k]: center -> E_k

    @property
    def ring(self):
        """Alternating edge-neighbor / face-diagonal ring, length 2n."""
        out = []
        for e, d in zip(self.edge_neighbors, self.diagonals):
            out.extend((e, d))
        return tuple(out)

    def sector_of_face(self, f):
        return self.faces.index(f)

    def sector_of_edge(self, neighbor):
        return self.edge_neighbors.index(neighbor)


class QuadMesh:
    """Half-edge quad mesh; validates manifoldness and orientation."""

    def __init__(self, vertices, faces):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=int)
        self.ignored_records = 0
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 4:
            raise MeshError("faces must be an (m, 4) array of quads")
        self._build()

    # -- construction -------------------------------------------------------

    def _build(self):
        nv = len(self.vertices)
        nf = len(self.faces)
        for f in range(nf):
            quad = self.faces[f]
            if len(set(int(i) for i in quad)) != 4:
                raise MeshError(f"face {f} repeats a vertex")
            if quad.min() < 0 or quad.max() >= nv:
                raise MeshError(f"face {f} references a missing vertex")

        self.origin = np.empty(4 * nf, dtype=int)
        self.next = np.empty(4 * nf, dtype=int)
        self.prev = np.empty(4 * nf, dtype=int)
        self.face_of = np.empty(4 * nf, dtype=int)
        directed = {}
        undirected = {}
        for f in range(nf):
            for k in range(4):
                h = 4 * f + k
                a = int(self.faces[f][k])
                b = int(self.faces[f][(k + 1) % 4])
                self.origin[h] = a
                self.next[h] = 4 * f + (k + 1) % 4
                self.prev[h] = 4 * f + (k - 1) % 4
                self.face_of[h] = f
                key = (min(a, b), max(a, b))
                undirected.setdefault(key, []).append(h)
                if (a, b) in directed:
                    other = self.face_of[directed[(a, b)]]
                    if len(undirected[key]) > 2:
                        raise MeshError(f"non-manifold edge ({a}, {b})")
                    raise MeshError(
                        f"inconsistent orientation between faces {other} and {f}")
                directed[(a, b)] = h

        self.twin = np.full(4 * nf, -1, dtype=int)
        for (a, b), h in directed.items():
            mate = directed.get((b, a))
            if mate is not None:
                self.twin[h] = mate
        for key, hs in undirected.items():
            if len(hs) > 2:
                raise MeshError(f"non-manifold edge {key}")

        self._out = [[] for _ in range(nv)]
        for h in range(4 * nf):
            self._out[self.origin[h]].append(h)
        for v in range(nv):
            if not self._out[v]:
                raise MeshError(f"isolated vertex {v}")

        self._boundary_vertex = np.zeros(nv, dtype=bool)
        for h in range(4 * nf):
            if self.twin[h] < 0:
                self._boundary_vertex[self.origin[h]] = True
                self._boundary_vertex[self.dest(h)] = True

        self._check_fans()

    def _check_fans(self):
        for v in range(len(self.vertices)):
            incident = self._out[v]
            if self._boundary_vertex[v]:
                # walk clockwise to the boundary start, then ccw across the fan
                starts = [h for h in incident if self.twin[self.prev[h]] < 0]
                if len(starts) != 1:
                    raise MeshError(f"non-manifold boundary vertex {v}")
                h = starts[0]
                seen = 1
                while self.twin[h] >= 0 and self.next[self.twin[h]] != starts[0]:
                    h = self.next[self.twin[h]]
                    seen += 1
                    if seen > len(incident):
                        break
                # open fan: the last outgoing edge has no twin continuation
                count = seen
            else:
                h = incident[0]
                count = 0
                start = h
                while True:
                    count += 1
                    h = self.twin[self.prev[h]]
                    if h == start:
                        break
                    if count > len(incident):
                        raise MeshError(f"non-manifold vertex {v}")
            if count != len(incident):
                raise MeshError(f"non-manifold vertex {v}")

    # -- queries ------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def dest(self, h):
        return int(self.origin[self.next[h]])

    def halfedge(self, a, b):
        """Half-edge id from vertex a to vertex b, or -1."""
        for h in self._out[a]:
            if self.dest(h) == b:
                return h
        return -1

    def is_boundary_vertex(self, v):
        return bool(self._boundary_vertex[v])

    def is_closed(self):
        return not self._boundary_vertex.any()

    def valence(self, v):
        return len(self._out[v])

    def edges(self):
        """Canonical undirected edges (a, b) with a < b, discovery order."""
        seen = set()
        out = []
        for h in range(4 * self.n_faces):
            a, b = int(self.origin[h]), self.dest(h)
            key = (min(a, b), max(a, b))
            if key not in seen:
                seen.add(key)
                out.append(key)
        return out

    def interior_edges(self):
        """Edges with two incident faces."""
        out = []
        for a, b in self.edges():
            h = self.halfedge(a, b)
            if h >= 0 and self.twin[h] >= 0:
                out.append((a, b))
        return out

    def bbox_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def outgoing_ccw(self, v, start=None):
        """Outgoing half-edges of an interior vertex in counterclockwise order."""
        if self._boundary_vertex[v]:
            raise MeshError(f"vertex {v} lies on the boundary")
        h = self._out[v][0] if start is None else start
        out = []
        first = h
        while True:
            out.append(h)
            h = self.twin[self.prev[h]]
            if h == first:
                break
        return out


def vertex_star(mesh: QuadMesh, v: int, start=None) -> VertexStar:
    """Counterclockwise ordered star of an interior vertex.

    Raises MeshError for boundary vertices: the construction is interior-only.
    """
    hs = mesh.outgoing_ccw(v, start=start)
    neighbors = tuple(mesh.dest(h) for h in hs)
    diagonals = tuple(mesh.dest(mesh.next[h]) for h in hs)
    faces = tuple(int(mesh.face_of[h]) for h in hs)
    return VertexStar(center=v, valence=len(hs), edge_neighbors=neighbors,
                      diagonals=diagonals, faces=faces, halfedges=tuple(hs))


def opposite_neighbor_valences(mesh: QuadMesh, v: int):
    """The two pairs of opposite edge-neighbor valences of a 4-valent vertex."""
    star = vertex_star(mesh, v)
    if star.valence != 4:
        raise MeshError("opposite pairs defined only for valence 4")
    ns = [mesh.valence(u) for u in star.edge_neighbors]
    return [(ns[0], ns[2]), (ns[1], ns[3])]


# ---------------------------------------------------------------------------
# OBJ ingestion (subset: v / f / comments; everything else counted + ignored)

def load_obj(path) -> QuadMesh:
    """Load a quad mesh from a Wavefront OBJ file.

    Only `v` and `f` records are honored; `f` records must have exactly four
    (1-based) indices.  Other record types are ignored; their count is
    reported on the returned mesh as `ignored_records`.
    """
    vertices = []
    faces = []
    ignored = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"malformed vertex record: {line!r}")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 4:
                    raise MeshError(f"non-quad face {len(faces)}")
                faces.append([i - 1 for i in idx])
            else:
                ignored += 1
    if not vertices or not faces:
        raise MeshError("OBJ file contains no quad mesh")
    mesh = QuadMesh(np.array(vertices), np.array(faces))
    mesh.ignored_records = ignored
    return mesh


def save_obj(path, vertices, faces, comment=None):
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for p in np.asarray(vertices, dtype=float):
            fh.write(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for quad in faces:
            fh.write("f " + " ".join(str(int(i) + 1) for i in quad) + "\n")
