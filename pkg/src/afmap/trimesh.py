"""Indexed triangle mesh with a directed-edge table and local surgery.

Triangles are stored as ordered vertex triples in a flat list; a dictionary
maps every directed edge ``(i, j)`` to the triangle that traverses it. A
consistently oriented manifold has each directed edge at most once, and an
undirected edge is on the boundary iff only one of its two directions is
present. Surgeries reuse the parent triangle slot for the first child and
append the others, so triangle indices never get invalidated.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .exact_geom import Point2, lerp, mpq, orient2d, point_in_triangle, to_exact

__all__ = [
    "MeshError", "NonManifoldError", "TopologyError", "TriMesh", "SurgeryRecord",
    "build", "assert_disk", "farthest_interior_vertex", "connectivity_equal",
]


class MeshError(ValueError):
    pass


class NonManifoldError(MeshError):
    pass


class TopologyError(MeshError):
    """The mesh is not a topological disk (or not what an operation requires)."""


@dataclass(slots=True)
class SurgeryRecord:
    kind: str  # "edge_split" | "triangle_split" | "edge_flip"
    args: tuple
    removed: tuple = ()
    added: tuple = ()
    new_vertex: Optional[int] = None
    position: object = None


def _canon(tri):
    a, b, c = tri
    if a <= b and a <= c:
        return (a, b, c)
    if b <= a and b <= c:
        return (b, c, a)
    return (c, a, b)


class TriMesh:
    """Triangle mesh over exact coordinates.

    ``pos[i]`` is a 2-tuple (``dim == 2``) or 3-tuple of ``mpq``, or ``None``
    for a vertex slot that has been reserved but not placed yet.
    """

    def __init__(self, dim: int = 2, record: bool = True):
        self.dim = dim
        self.pos: list = []
        self.tris: list = []
        self.he: dict = {}
        self.vtris: list = []
        self.visited: list = []
        self.records: Optional[list] = [] if record else None

    # ------------------------------------------------------------------ basics
    def copy(self, record: Optional[bool] = None) -> "TriMesh":
        m = TriMesh(self.dim, record=(self.records is not None) if record is None else record)
        m.pos = list(self.pos)
        m.tris = list(self.tris)
        m.he = dict(self.he)
        m.vtris = [set(s) for s in self.vtris]
        m.visited = list(self.visited)
        return m

    @property
    def n_vertices(self) -> int:
        return len(self.pos)

    @property
    def n_triangles(self) -> int:
        return len(self.tris)

    def add_vertex(self, p=None) -> int:
        self.pos.append(p)
        self.vtris.append(set())
        return len(self.pos) - 1

    def _add_tri(self, tri, visited=False) -> int:
        ti = len(self.tris)
        self.tris.append(tri)
        self.visited.append(visited)
        self._link(ti, tri)
        return ti

    def _link(self, ti, tri):
        a, b, c = tri
        he = self.he
        for e in ((a, b), (b, c), (c, a)):
            if e in he:
                raise NonManifoldError(f"directed edge {e} used twice")
            he[e] = ti
        self.vtris[a].add(ti)
        self.vtris[b].add(ti)
        self.vtris[c].add(ti)

    def _unlink(self, ti):
        a, b, c = self.tris[ti]
        he = self.he
        del he[(a, b)], he[(b, c)], he[(c, a)]
        self.vtris[a].discard(ti)
        self.vtris[b].discard(ti)
        self.vtris[c].discard(ti)

    def _replace_tri(self, ti, tri):
        self._unlink(ti)
        self.tris[ti] = tri
        self._link(ti, tri)

    def tri_of(self, i: int, j: int) -> Optional[int]:
        """Index of the triangle traversing the directed edge i -> j."""
        return self.he.get((i, j))

    def edge_triangles(self, i: int, j: int) -> list:
        return [t for t in (self.he.get((i, j)), self.he.get((j, i))) if t is not None]

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.he or (j, i) in self.he

    def is_boundary_edge(self, i: int, j: int) -> bool:
        return ((i, j) in self.he) != ((j, i) in self.he)

    def edges(self) -> set:
        return {(i, j) if i < j else (j, i) for (i, j) in self.he}

    def boundary_edges(self) -> list:
        """Directed boundary edges, oriented like their triangle."""
        he = self.he
        return [e for e in he if (e[1], e[0]) not in he]

    def neighbors(self, v: int) -> set:
        out = set()
        for ti in self.vtris[v]:
            out.update(self.tris[ti])
        out.discard(v)
        return out

    def is_boundary_vertex(self, v: int) -> bool:
        he = self.he
        for ti in self.vtris[v]:
            a, b, c = self.tris[ti]
            for (i, j) in ((a, b), (b, c), (c, a)):
                if (i == v or j == v) and (j, i) not in he:
                    return True
        return False

    def boundary_flags(self) -> list:
        flags = [False] * len(self.pos)
        for (i, j) in self.boundary_edges():
            flags[i] = flags[j] = True
        return flags

    def boundary_loops(self) -> list:
        """Boundary cycles, each starting at its smallest vertex index."""
        succ = {}
        for (i, j) in self.boundary_edges():
            if i in succ:
                raise TopologyError(f"boundary pinches at vertex {i}")
            succ[i] = j
        loops = []
        seen = set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            v = succ[start]
            while v != start:
                if v in seen or v not in succ:
                    raise TopologyError("boundary is not a union of simple cycles")
                loop.append(v)
                seen.add(v)
                v = succ[v]
            loops.append(loop)
        return loops

    def orient(self, ti: int) -> int:
        a, b, c = self.tris[ti]
        return orient2d(self.pos[a], self.pos[b], self.pos[c])

    def referenced_vertices(self) -> set:
        return {v for v, s in enumerate(self.vtris) if s}

    # ---------------------------------------------------------------- surgery
    def _log(self, rec: SurgeryRecord):
        if self.records is not None:
            self.records.append(rec)

    def split_edge(self, i: int, j: int, t=None, position=None) -> int:
        """Insert a vertex on edge (i, j); every incident triangle becomes two.

        The new vertex goes at ``pos[i] + t (pos[j] - pos[i])`` unless an
        explicit ``position`` is given (needed when an endpoint is unplaced).
        """
        if not self.has_edge(i, j):
            raise MeshError(f"no edge ({i}, {j})")
        if position is None:
            t = to_exact(t)
            if not 0 < t < 1:
                raise ValueError(f"edge parameter {t} outside (0, 1)")
            pi, pj = self.pos[i], self.pos[j]
            if len(pi) == 2:
                position = lerp(pi, pj, t)
            else:
                position = tuple(a + t * (b - a) for a, b in zip(pi, pj))
        v = self.add_vertex(position)
        removed, added = [], []
        for (a, b) in ((i, j), (j, i)):
            ti = self.he.get((a, b))
            if ti is None:
                continue
            c = self._third(ti, a, b)
            # (a, b, c) -> (a, v, c) + (v, b, c)
            self._replace_tri(ti, (a, v, c))
            tn = self._add_tri((v, b, c), self.visited[ti])
            removed.append(ti)
            added.extend((ti, tn))
        self._log(SurgeryRecord("edge_split", (i, j), tuple(removed), tuple(added), v,
                                position))
        return v

    def split_triangle(self, ti: int, p, check: bool = True) -> int:
        """Split triangle ``ti`` into three around the strictly interior point ``p``."""
        a, b, c = self.tris[ti]
        if check:
            self._require_interior(ti, p)
        v = self.add_vertex(p)
        vis = self.visited[ti]
        self._replace_tri(ti, (a, b, v))
        t1 = self._add_tri((b, c, v), vis)
        t2 = self._add_tri((c, a, v), vis)
        self._log(SurgeryRecord("triangle_split", (ti,), (ti,), (ti, t1, t2), v, p))
        return v

    def _require_interior(self, ti, p):
        a, b, c = (self.pos[k] for k in self.tris[ti])
        if len(p) == 2:
            if not point_in_triangle(p, a, b, c, strict=True):
                raise ValueError("split point is not strictly inside the triangle")
            return
        bary = _barycentric3(p, a, b, c)
        if bary is None or min(bary) <= 0:
            raise ValueError("split point is not strictly inside the triangle")

    def flip_edge(self, i: int, j: int, strict: bool = True):
        """Replace the diagonal (i, j) of its quad by the other diagonal."""
        t1 = self.he.get((i, j))
        t2 = self.he.get((j, i))
        if t1 is None or t2 is None:
            raise MeshError(f"edge ({i}, {j}) is on the boundary or missing")
        x = self._third(t1, i, j)
        y = self._third(t2, j, i)
        if x == y or self.has_edge(x, y):
            raise MeshError("flip would create a duplicate edge")
        if strict and self.dim == 2:
            P = self.pos
            if not (orient2d(P[i], P[y], P[j]) > 0 and orient2d(P[y], P[j], P[x]) > 0
                    and orient2d(P[j], P[x], P[i]) > 0 and orient2d(P[x], P[i], P[y]) > 0):
                raise ValueError("quad around the edge is not strictly convex")
        self._unlink(t1)
        self._unlink(t2)
        self.tris[t1] = (x, i, y)
        self.tris[t2] = (y, j, x)
        self._link(t1, self.tris[t1])
        self._link(t2, self.tris[t2])
        self._log(SurgeryRecord("edge_flip", (i, j), (t1, t2), (t1, t2)))
        return t1, t2

    def _third(self, ti, a, b):
        for v in self.tris[ti]:
            if v != a and v != b:
                return v
        raise MeshError("degenerate triangle")

    def replay(self, records: Iterable[SurgeryRecord]):
        for r in records:
            if r.kind == "edge_split":
                self.split_edge(*r.args, position=r.position)
            elif r.kind == "triangle_split":
                self.split_triangle(r.args[0], r.position, check=False)
            elif r.kind == "edge_flip":
                self.flip_edge(*r.args, strict=False)
            else:
                raise ValueError(r.kind)

    # ------------------------------------------------------------------ audit
    def audit(self):
        """Full consistency check of the edge table; raises MeshError on failure."""
        he = {}
        vt = [set() for _ in self.pos]
        for ti, tri in enumerate(self.tris):
            a, b, c = tri
            if len({a, b, c}) != 3:
                raise MeshError(f"triangle {ti} repeats a vertex")
            for e in ((a, b), (b, c), (c, a)):
                if e in he:
                    raise MeshError(f"directed edge {e} appears twice (orientation or manifoldness)")
                he[e] = ti
            for v in tri:
                vt[v].add(ti)
        if he != self.he:
            raise MeshError("edge table out of sync")
        if vt != self.vtris:
            raise MeshError("vertex incidence out of sync")


def _barycentric3(p, a, b, c):
    # least-squares-free exact barycentrics for a point assumed coplanar
    def sub(u, v):
        return tuple(x - y for x, y in zip(u, v))

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    v0, v1, v2 = sub(b, a), sub(c, a), sub(p, a)
    d00, d01, d11 = dot(v0, v0), dot(v0, v1), dot(v1, v1)
    d20, d21 = dot(v2, v0), dot(v2, v1)
    den = d00 * d11 - d01 * d01
    if den == 0:
        return None
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    return (1 - v - w, v, w)


def build(positions: Sequence, triangles: Sequence, record: bool = True,
          reorient: bool = True) -> TriMesh:
    """Build a mesh, converting coordinates exactly and making orientation coherent.

    Raises ``NonManifoldError`` for edges with three or more triangles and
    ``MeshError`` for empty input, bad indices, or a non-orientable surface.
    2D meshes are additionally oriented counterclockwise. With
    ``reorient=False`` faces keep their given vertex order (for audits), and
    an incoherent orientation surfaces as a ``NonManifoldError``.
    """
    if not triangles:
        raise MeshError("empty mesh")
    pts = [tuple(to_exact(c) for c in p) for p in positions]
    dims = {len(p) for p in pts}
    if len(dims) != 1 or dims.pop() not in (2, 3):
        raise MeshError("positions must all be 2D or all 3D")
    dim = len(pts[0])
    if dim == 2:
        pts = [Point2(*p) for p in pts]
    n = len(pts)
    tris = []
    for t in triangles:
        t = tuple(int(v) for v in t)
        if len(t) != 3:
            raise MeshError("faces must be triangles")
        if min(t) < 0 or max(t) >= n:
            raise MeshError(f"triangle {t} has an index out of range")
        if len(set(t)) != 3:
            raise MeshError(f"triangle {t} repeats a vertex")
        tris.append(t)

    # undirected edge -> triangles
    eds = {}
    for ti, (a, b, c) in enumerate(tris):
        for i, j in ((a, b), (b, c), (c, a)):
            key = (i, j) if i < j else (j, i)
            eds.setdefault(key, []).append(ti)
    for key, ts in eds.items():
        if len(ts) > 2:
            raise NonManifoldError(f"edge {key} has {len(ts)} incident triangles")
        if len(ts) == 2 and ts[0] == ts[1]:
            raise NonManifoldError(f"edge {key} used twice by one triangle")

    if not reorient:
        m = TriMesh(dim, record=record)
        for p in pts:
            m.add_vertex(p)
        for t in tris:
            m._add_tri(t)
        return m

    # breadth-first orientation propagation
    flip = [None] * len(tris)

    def has_dir(ti, i, j):
        a, b, c = tris[ti]
        if flip[ti]:
            a, b, c = a, c, b
        return (a, b) == (i, j) or (b, c) == (i, j) or (c, a) == (i, j)

    for seed in range(len(tris)):
        if flip[seed] is not None:
            continue
        flip[seed] = False
        queue = deque([seed])
        while queue:
            ti = queue.popleft()
            a, b, c = tris[ti]
            if flip[ti]:
                a, b, c = a, c, b
            for i, j in ((a, b), (b, c), (c, a)):
                key = (i, j) if i < j else (j, i)
                for tj in eds[key]:
                    if tj == ti:
                        continue
                    if flip[tj] is None:
                        flip[tj] = False
                        if has_dir(tj, i, j):
                            flip[tj] = True
                        queue.append(tj)
                    elif has_dir(tj, i, j):
                        raise MeshError("orientation cannot be made coherent (non-orientable)")
    oriented = [(a, c, b) if f else (a, b, c) for (a, b, c), f in zip(tris, flip)]

    if dim == 2:
        area = mpq(0)
        for a, b, c in oriented:
            pa, pb, pc = pts[a], pts[b], pts[c]
            area += (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
        if area < 0:
            oriented = [(a, c, b) for a, b, c in oriented]

    m = TriMesh(dim, record=record)
    for p in pts:
        m.add_vertex(p)
    for t in oriented:
        m._add_tri(t)
    return m


def assert_disk(mesh: TriMesh):
    """Raise ``TopologyError`` unless the mesh is a connected disk."""
    if mesh.n_triangles == 0:
        raise TopologyError("empty mesh")
    used = mesh.referenced_vertices()
    if len(used) != mesh.n_vertices:
        raise TopologyError(f"{mesh.n_vertices - len(used)} isolated vertices")
    # connectivity over triangles
    seen = {0}
    stack = [0]
    while stack:
        ti = stack.pop()
        for v in mesh.tris[ti]:
            for tj in mesh.vtris[v]:
                if tj not in seen:
                    seen.add(tj)
                    stack.append(tj)
    if len(seen) != mesh.n_triangles:
        raise TopologyError("mesh is disconnected")
    loops = mesh.boundary_loops()
    if len(loops) != 1:
        raise TopologyError(f"expected one boundary loop, found {len(loops)}")
    V = mesh.n_vertices
    E = len(mesh.edges())
    F = mesh.n_triangles
    chi = V - E + F
    if chi != 1:
        raise TopologyError(f"Euler characteristic {chi} != 1 (genus > 0?)")


def _edge_length(p, q) -> float:
    return math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(p, q)))


def farthest_interior_vertex(mesh: TriMesh) -> int:
    """Interior vertex farthest from the boundary (multi-source Dijkstra).

    Edge weights are binary64 Euclidean lengths; ties go to the smallest index.
    """
    flags = mesh.boundary_flags()
    interior = [v for v in range(mesh.n_vertices) if not flags[v] and mesh.vtris[v]]
    if not interior:
        raise TopologyError("mesh has no interior vertex")
    fpos = [tuple(float(c) for c in p) for p in mesh.pos]
    dist = [math.inf] * mesh.n_vertices
    heap = []
    for v, b in enumerate(flags):
        if b:
            dist[v] = 0.0
            heap.append((0.0, v))
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        pv = fpos[v]
        for w in mesh.neighbors(v):
            nd = d + math.dist(pv, fpos[w])
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    best = max(dist[v] for v in interior)
    return min(v for v in interior if dist[v] == best)


def connectivity_equal(a: TriMesh, b: TriMesh) -> bool:
    if a.n_vertices != b.n_vertices or a.n_triangles != b.n_triangles:
        return False
    return {_canon(t) for t in a.tris} == {_canon(t) for t in b.tris}
