"""Advancing front mapping engine.

Two meshes are advanced in lockstep: ``m1`` (the source, possibly refined)
and ``m2`` (the target triangulation of the domain polygon). Vertex ``i`` of
``m1`` corresponds to vertex ``i`` of ``m2``. At all times ``m2`` consists of
the images of the visited source triangles plus one fan triangle joining each
front edge to the origin vertex ``O``; every ``m2`` triangle is strictly
counterclockwise.

The front is stored as ``nxt``/``prv`` maps over its vertices, oriented so
that the unvisited region lies to the left of every front edge.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .domain import BoundaryMap, DomainSpec
from .exact_geom import (Point2, line_intersection, mpq, orient2d, orient2d_filtered,
                         snap_to_double, squared_distance,
                         bit_size, round_dyadic)
from .trimesh import TriMesh, assert_disk, farthest_interior_vertex

__all__ = [
    "AfmConfig", "EventLog", "MapState", "InvariantError",
    "preprocess_refine", "init", "advance", "advance_split", "advance_flip",
    "convexify", "convexify_refine", "concavify", "snap_round_vertex",
]


class InvariantError(RuntimeError):
    """An internal invariant was violated. Never expected; indicates a bug."""


@dataclass
class AfmConfig:
    split_weights: tuple = (mpq(99, 200), mpq(99, 200), mpq(2, 200))
    lift: mpq = mpq(99, 100)
    queue_policy: str = "fifo"
    move_timeout: Optional[float] = None
    snap_rounding: bool = True
    filtered_predicates: bool = True
    audit: str = "local"  # "local" | "full"
    trace_every: int = 0

    def __post_init__(self):
        w = tuple(mpq(x) for x in self.split_weights)
        if len(w) != 3 or min(w) <= 0 or sum(w) != 1:
            raise ValueError("split weights must be three positive rationals summing to 1")
        self.split_weights = w
        self.lift = mpq(self.lift)
        if not 0 < self.lift < 1:
            raise ValueError("lift factor must lie in (0, 1)")
        if self.queue_policy != "fifo":
            raise ValueError("only the FIFO queue policy is implemented")
        if self.audit not in ("local", "full"):
            raise ValueError("audit must be 'local' or 'full'")


@dataclass
class EventLog:
    triangles_in: int = 0
    preprocess_splits: int = 0
    triangle_splits: int = 0
    edge_flips: int = 0
    convexifications: int = 0
    concavifications: int = 0
    refine_splits: int = 0
    reseeds: int = 0
    snap_attempts: int = 0
    snap_rounded: int = 0
    snap_coarsened: int = 0
    converged: bool = False
    timed_out: bool = False
    visited: int = 0
    total: int = 0
    max_move_seconds: float = 0.0
    runtime: float = 0.0
    # per-call split counts of convexify_refine paired with the valence bound
    refine_calls: list = field(default_factory=list)

    @property
    def moves(self) -> int:
        return self.triangle_splits + self.edge_flips


# ---------------------------------------------------------------------------
def preprocess_refine(m1: TriMesh) -> tuple:
    """Split interior edges joining two boundary vertices at their midpoints.

    A lone triangle (no interior edge, no interior vertex) gets a barycentric
    split instead. Returns ``(refined_copy, number_of_splits)``.
    """
    assert_disk(m1)
    m = m1.copy()
    splits = 0
    flags = m.boundary_flags()
    half = mpq(1, 2)
    for (i, j) in sorted(m.edges()):
        if flags[i] and flags[j] and not m.is_boundary_edge(i, j):
            m.split_edge(i, j, half)
            flags.append(False)
            splits += 1
    if all(flags[v] for v in range(m.n_vertices)):
        # only possible for a single triangle
        a, b, c = m.tris[0]
        P = m.pos
        third = mpq(1, 3)
        p = tuple((x + y + z) * third for x, y, z in zip(P[a], P[b], P[c]))
        if m.dim == 2:
            p = Point2(*p)
        m.split_triangle(0, p)
        splits += 1
    return m, splits


def init(m1: TriMesh, spec: DomainSpec, bmap: BoundaryMap,
         config: Optional[AfmConfig] = None) -> "MapState":
    return MapState(m1, spec, bmap, config or AfmConfig())


def advance(state: "MapState", config: Optional[AfmConfig] = None):
    if config is not None:
        state.config = config
    return state.run()


def advance_split(state: "MapState", a, b, t, v):
    state.split_move(a, b, v, t)
    state._flush_snaps()


def advance_flip(state: "MapState", vl, v, vr, t):
    state.flip_move(vl, v, vr, t)
    state._flush_snaps()


def convexify(state: "MapState", vl, v, vr):
    state.convexify(vl, v, vr)


def convexify_refine(state: "MapState", w, q) -> int:
    return state.convexify_refine(w, q)


def concavify(state: "MapState", vl, v, vr, t):
    state.concavify(vl, v, vr, t)
    state._flush_snaps()


def snap_round_vertex(state: "MapState", v) -> str:
    return state.snap_round_vertex(v)


# ---------------------------------------------------------------------------
class MapState:
    def __init__(self, m1: TriMesh, spec: DomainSpec, bmap: BoundaryMap, config: AfmConfig):
        self.config = config
        self.spec = spec
        self.m1 = m1
        self.log = EventLog(total=m1.n_triangles)
        self.O = O = farthest_interior_vertex(m1)
        self.bnd = m1.boundary_flags()

        m2 = TriMesh(2, record=m1.records is not None)
        for _ in range(m1.n_vertices):
            m2.add_vertex(None)
        for v, p in zip(bmap.loop, bmap.positions):
            m2.pos[v] = p
        m2.pos[O] = spec.kernel
        self.m2 = m2
        self.fp = [None] * m1.n_vertices
        for v in bmap.loop:
            self._set_float(v)
        self._set_float(O)

        self.nxt = {}
        self.prv = {}
        loop = bmap.loop
        for k, a in enumerate(loop):
            b = loop[(k + 1) % len(loop)]
            if m1.tri_of(a, b) is None:
                raise InvariantError("boundary map loop is not oriented like the mesh")
            self.nxt[a] = b
            self.prv[b] = a
            m2._add_tri((a, b, O))
            if self.orient(a, b, O) <= 0:
                raise InvariantError(f"fan triangle {(a, b, O)} is not positive; kernel point invalid")
        m1.visited = [False] * m1.n_triangles
        self.queue = deque((a, self.nxt[a]) for a in loop)
        self.pending_snap = []
        self.pending_snap_m1 = []
        self.trace = []
        self.star_O = len(m1.vtris[O])

    # ------------------------------------------------------------ utilities
    def _set_float(self, v):
        p = self.m2.pos[v]
        self.fp[v] = (float(p[0]), float(p[1]))

    def orient(self, i, j, k) -> int:
        P = self.m2.pos
        if self.config.filtered_predicates:
            F = self.fp
            return orient2d_filtered(P[i], P[j], P[k], F[i], F[j], F[k])
        return orient2d(P[i], P[j], P[k])

    def _new_vertex_slots(self, v):
        # keep per-vertex arrays in sync with the meshes
        while len(self.fp) <= v:
            self.fp.append(None)
            self.bnd.append(False)

    def on_front(self, v) -> bool:
        return v in self.nxt

    def front_cycle(self) -> list:
        start = next(iter(self.nxt))
        cyc = [start]
        v = self.nxt[start]
        while v != start:
            cyc.append(v)
            v = self.nxt[v]
            if len(cyc) > len(self.nxt):
                raise InvariantError("front is not a simple cycle")
        return cyc

    # ------------------------------------------------------------ main loop
    def run(self):
        cfg = self.config
        m1 = self.m1
        log = self.log
        t_start = time.perf_counter()
        last_reseed_visited = -1
        while True:
            while self.queue:
                a, b = self.queue.popleft()
                if self.nxt.get(a) != b:
                    continue
                t0 = time.perf_counter()
                self.step(a, b)
                dt = time.perf_counter() - t0
                if dt > log.max_move_seconds:
                    log.max_move_seconds = dt
                if cfg.move_timeout is not None and dt > cfg.move_timeout:
                    log.timed_out = True
                    log.runtime = time.perf_counter() - t_start
                    return log
            unvisited = log.total - log.visited
            if unvisited == len(m1.vtris[self.O]) and all(
                    not m1.visited[t] for t in m1.vtris[self.O]):
                break
            if log.visited == last_reseed_visited:
                raise InvariantError("no progress between queue re-seeds (livelock)")
            last_reseed_visited = log.visited
            log.reseeds += 1
            self.queue.extend((a, self.nxt[a]) for a in self.front_cycle())
        for t in m1.vtris[self.O]:
            m1.visited[t] = True
            log.visited += 1
        log.converged = True
        log.runtime = time.perf_counter() - t_start
        return log

    def step(self, a, b):
        """Process the unvisited source triangle behind front edge a -> b."""
        m1 = self.m1
        t = m1.tri_of(a, b)
        if t is None or m1.visited[t]:
            raise InvariantError(f"front edge {(a, b)} has no unvisited triangle behind it")
        c = m1._third(t, a, b)
        nxt = self.nxt
        bc = nxt.get(b) == c
        ca = nxt.get(c) == a
        n_front = 1 + bc + ca
        if n_front == 1:
            if c in nxt or c == self.O:
                return
            self.split_move(a, b, c, t)
        elif n_front == 2:
            if bc:
                self.flip_move(a, b, c, t)
            else:
                self.flip_move(c, a, b, t)
        else:
            raise InvariantError("triangle with three front edges")
        self._flush_snaps()
        if self.config.audit == "full":
            self.audit()
        if self.config.trace_every and (self.log.moves % self.config.trace_every == 0):
            self.trace.append([self.fp[v] for v in self.front_cycle()])

    # ------------------------------------------------------------ moves
    def split_move(self, a, b, c, t, position=None):
        """Insert source triangle (a, b, c) whose only front edge is a -> b.

        ``position`` overrides the default blend of a, b and the origin.
        """
        m2 = self.m2
        O = self.O
        P = m2.pos
        if position is None:
            wa, wb, wo = self.config.split_weights
            pa, pb, po = P[a], P[b], P[O]
            position = Point2(wa * pa[0] + wb * pb[0] + wo * po[0],
                              wa * pa[1] + wb * pb[1] + wo * po[1])
        ti = m2.tri_of(a, b)
        if ti is None or O not in m2.tris[ti]:
            raise InvariantError("front edge image is not a fan triangle")
        self._place_in_triangle(ti, c, position)
        nxt, prv = self.nxt, self.prv
        nxt[a] = c
        prv[c] = a
        nxt[c] = b
        prv[b] = c
        self._visit(t)
        self.log.triangle_splits += 1
        self.queue.append((a, c))
        self.queue.append((c, b))
        self.pending_snap.append(c)

    def _place_in_triangle(self, ti, v, p):
        """Split m2 triangle ``ti`` at ``p`` using the reserved vertex slot ``v``."""
        m2 = self.m2
        if m2.pos[v] is not None or m2.vtris[v]:
            raise InvariantError(f"vertex {v} is already placed")
        a, b, c = m2.tris[ti]
        m2.pos[v] = p
        self._set_float(v)
        if not (self.orient(a, b, v) > 0 and self.orient(b, c, v) > 0 and self.orient(c, a, v) > 0):
            raise InvariantError("split point not strictly inside its triangle")
        m2._replace_tri(ti, (a, b, v))
        t1 = m2._add_tri((b, c, v))
        t2 = m2._add_tri((c, a, v))
        m2.visited[ti] = m2.visited[t1] = m2.visited[t2] = False
        from .trimesh import SurgeryRecord
        m2._log(SurgeryRecord("triangle_split", (ti,), (ti,), (ti, t1, t2), v, p))

    def _visit(self, t):
        self.m1.visited[t] = True
        self.log.visited += 1

    def flip_move(self, vl, v, vr, t):
        """Insert source triangle (vl, v, vr) whose front edges are vl -> v -> vr."""
        if self.orient(vl, v, vr) <= 0:
            self.convexify(vl, v, vr)
        if self.orient(vl, vr, self.O) <= 0:
            self.concavify(vl, v, vr, t)
            return
        self._flip(vl, v, vr, t)

    def _flip(self, vl, v, vr, t):
        O = self.O
        if not (self.orient(vl, v, vr) > 0 and self.orient(vl, vr, O) > 0):
            raise InvariantError(f"flip quad at {v} is not strictly convex")
        self.m2.flip_edge(v, O, strict=False)
        nxt, prv = self.nxt, self.prv
        nxt[vl] = vr
        prv[vr] = vl
        del nxt[v], prv[v]
        self._visit(t)
        self.log.edge_flips += 1
        self.queue.append((vl, vr))

    # ------------------------------------------------------------ convexify
    def convexify(self, vl, v, vr):
        """Relocate vl or vr towards O so that the front turns left at v."""
        P = self.m2.pos
        O = self.O
        po = P[O]
        cands = []
        if not self.bnd[vr]:
            hit = line_intersection(P[vr], po, P[vl], P[v])
            if hit is None or not 0 <= hit[1] < 1:
                raise InvariantError("convexification: no intersection on (vr, O)")
            cands.append((squared_distance(hit[0], po), 1, vr, hit[0]))
        if not self.bnd[vl]:
            hit = line_intersection(P[vl], po, P[vr], P[v])
            if hit is None or not 0 <= hit[1] < 1:
                raise InvariantError("convexification: no intersection on (vl, O)")
            cands.append((squared_distance(hit[0], po), 0, vl, hit[0]))
        if not cands:
            raise InvariantError("convexification: both front neighbours are on the boundary")
        # farther from O wins; ties go to vr
        _, _, w, p = max(cands, key=lambda c: (c[0], c[1]))
        lift = self.config.lift
        q = Point2(lift * p[0] + (1 - lift) * po[0], lift * p[1] + (1 - lift) * po[1])
        self.convexify_refine(w, q)
        self.m2.pos[w] = q
        self._set_float(w)
        self.log.convexifications += 1
        self.pending_snap.append(w)
        if self.config.audit == "full":
            for ti in self.m2.vtris[w]:
                if self.m2.orient(ti) <= 0:
                    raise InvariantError("relocation inverted a triangle")
        if self.orient(vl, v, vr) <= 0:
            raise InvariantError("convexification did not make the front convex")

    def convexify_refine(self, w, q) -> int:
        """Split visited triangles around ``w`` that would invert when ``w`` moves to ``q``.

        Triangles are swept from each front neighbour inwards. A red triangle
        (w, x, y) has exactly one of its edges at w with O on its inner side;
        that edge is cut where the line through O and the opposite vertex
        crosses it, leaving a child whose far edge points at O. Children never
        change the valence of w, so at most valence(w) splits happen.
        """
        m2 = self.m2
        P = m2.pos
        O = self.O
        po = P[O]
        valence = len(m2.vtris[w])
        splits = 0

        # clockwise sweep from the next front vertex
        y = self.nxt[w]
        for _ in range(valence + 1):
            ti = m2.tri_of(y, w)
            tri = m2.tris[ti]
            if O in tri:
                break
            x = m2._third(ti, w, y)
            if orient2d(P[x], P[y], q) <= 0 and orient2d(P[w], P[x], po) > 0:
                x = self._refine_split(w, x, y)
                splits += 1
            y = x
        else:
            raise InvariantError("clockwise refinement sweep did not reach the fan")

        # counterclockwise sweep from the previous front vertex
        x = self.prv[w]
        for _ in range(valence + 1):
            ti = m2.tri_of(w, x)
            tri = m2.tris[ti]
            if O in tri:
                break
            y = m2._third(ti, w, x)
            if orient2d(P[x], P[y], q) <= 0 and orient2d(P[y], P[w], po) > 0:
                y = self._refine_split(w, y, x)
                splits += 1
            x = y
        else:
            raise InvariantError("counterclockwise refinement sweep did not reach the fan")

        for ti in m2.vtris[w]:
            a, b, c = m2.tris[ti]
            pa, pb, pc = (q if k == w else P[k] for k in (a, b, c))
            if orient2d(pa, pb, pc) <= 0:
                raise InvariantError("refinement left an inverting triangle around the moved vertex")
        if splits > valence:
            raise InvariantError("refinement exceeded the valence bound")
        self.log.refine_splits += splits
        self.log.refine_calls.append((splits, valence))
        return splits

    def _refine_split(self, w, x, apex):
        """Split edge (w, x) in both meshes where the line (O, apex) crosses it."""
        m1, m2 = self.m1, self.m2
        P = m2.pos
        hit = line_intersection(P[w], P[x], P[self.O], P[apex])
        if hit is None or not 0 < hit[1] < 1:
            raise InvariantError("refinement split point not interior to the edge")
        s, t = hit[0], hit[1]
        k1 = m1.split_edge(w, x, t)
        k2 = m2.split_edge(w, x, position=s)
        if k1 != k2:
            raise InvariantError("vertex numbering of the two meshes diverged")
        self._new_vertex_slots(k1)
        self._set_float(k1)
        self.pending_snap.append(k1)
        self.pending_snap_m1.append(k1)
        self.log.total += 2
        self.log.visited += 2
        return k1

    # ------------------------------------------------------------ concavify
    def concavify(self, vl, v, vr, t):
        """Route the front around O when triangle (vl, v, vr) contains it.

        The source edge (vl, vr) is split at its midpoint by a new vertex vn;
        vn's image is placed inside the region from which the split that
        inserts it and the next two flips are all legal, and those three moves
        are executed immediately.
        """
        m1, m2 = self.m1, self.m2
        O = self.O
        tp = m1.tri_of(vl, vr)
        if tp is None or m1.visited[tp]:
            raise InvariantError("concavification: no unvisited triangle across (vl, vr)")
        w = m1._third(tp, vl, vr)
        vll = self.prv[vl]
        vrr = self.nxt[vr]
        side = "right" if (w == vrr and w != vll) else "left"
        if side == "left":
            base = (vl, v, O)
            cons = [(v, vr), (vr, O)]
            if w == vll:
                cons += [(vll, vl), (O, vll)]
        else:
            base = (v, vr, O)
            cons = [(vl, v), (O, vl), (vr, vrr), (vrr, O)]
        pos = self._feasible_point(base, cons)

        vn = m1.split_edge(vl, vr, mpq(1, 2))
        if m2.add_vertex(None) != vn:
            raise InvariantError("vertex numbering of the two meshes diverged")
        self._new_vertex_slots(vn)
        self.pending_snap_m1.append(vn)
        self.log.concavifications += 1
        self.log.total += 2
        t1 = m1.tri_of(vl, v)    # (vl, v, vn)
        t2 = m1.tri_of(v, vr)    # (v, vr, vn)
        if side == "left":
            self.split_move(vl, v, vn, t1, position=pos)
            self._flip(vn, v, vr, t2)
            if w == vll:
                self._flip(vll, vl, vn, m1.tri_of(vll, vl))
        else:
            self.split_move(v, vr, vn, t2, position=pos)
            self._flip(vl, v, vn, t1)
            self._flip(vn, vr, vrr, m1.tri_of(vr, vrr))

    def _feasible_point(self, base, cons):
        """A point strictly inside triangle ``base`` and strictly left of each directed line."""
        from .domain import _clip
        P = self.m2.pos
        lines = [(P[a], P[b]) for a, b in cons]
        tri = [P[k] for k in base]
        region = list(tri)
        for p, q in lines:
            region = _clip(region, p, q)
            if len(region) < 3:
                raise InvariantError("concavification feasible region is empty")
        n = len(region)
        cen = Point2(sum((r[0] for r in region), mpq(0)) / n, sum((r[1] for r in region), mpq(0)) / n)
        all_lines = lines + [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]

        def ok(p):
            return all(orient2d(a, b, p) > 0 for a, b in all_lines)

        # prefer the middle of the feasible stretch of the front edge
        fa, fb = tri[0], tri[1]
        cand = None
        for i in range(n):
            r0, r1 = region[i], region[(i + 1) % n]
            if orient2d(fa, fb, r0) == 0 and orient2d(fa, fb, r1) == 0:
                mid = Point2((r0[0] + r1[0]) / 2, (r0[1] + r1[1]) / 2)
                lift = self.config.lift
                cand = Point2(lift * mid[0] + (1 - lift) * cen[0], lift * mid[1] + (1 - lift) * cen[1])
                break
        if cand is not None:
            for _ in range(32):
                if ok(cand):
                    return cand
                cand = Point2((cand[0] + cen[0]) / 2, (cand[1] + cen[1]) / 2)
        if not ok(cen):
            raise InvariantError("concavification feasible region has no interior")
        return cen

    # ------------------------------------------------------------ snapping
    def _flush_snaps(self):
        if self.config.snap_rounding:
            for v in self.pending_snap:
                self.snap_round_vertex(v)
            for v in self.pending_snap_m1:
                snap_round_source_vertex(self.m1, v)
        self.pending_snap.clear()
        self.pending_snap_m1.clear()

    def snap_round_vertex(self, v) -> str:
        """Try to replace the image of ``v`` by its nearest binary64 point."""
        m2 = self.m2
        p = m2.pos[v]
        (fx, fy), q = snap_to_double(p)
        if q == p:
            return "rounded"
        self.log.snap_attempts += 1
        if self._valid_at(v, q):
            m2.pos[v] = q
            self.fp[v] = (fx, fy)
            self.log.snap_rounded += 1
            return "rounded"
        # No valid double nearby: settle for the coarsest dyadic grid that
        # works, so that coordinates built from this vertex stay short.
        size = bit_size(p)
        bits = 64
        while 4 * bits < size:
            q = Point2(round_dyadic(p[0], bits), round_dyadic(p[1], bits))
            if self._valid_at(v, q):
                m2.pos[v] = q
                self._set_float(v)
                self.log.snap_coarsened += 1
                break
            bits = bits * 3 // 2
        return "kept_rational"

    def _valid_at(self, v, q) -> bool:
        m2 = self.m2
        P = m2.pos
        for ti in m2.vtris[v]:
            a, b, c = m2.tris[ti]
            pa, pb, pc = (q if k == v else P[k] for k in (a, b, c))
            if orient2d(pa, pb, pc) <= 0:
                return False
        return True

    # ------------------------------------------------------------ audits
    def audit(self):
        """Full invariant audit (expensive): positivity, front, coverage partition."""
        m1, m2 = self.m1, self.m2
        for ti in range(m2.n_triangles):
            if m2.orient(ti) <= 0:
                raise InvariantError(f"m2 triangle {ti} {m2.tris[ti]} is not positive")
        cyc = self.front_cycle()
        if len(cyc) != len(self.nxt):
            raise InvariantError("front has more than one component")
        O = self.O
        fan = {(a, self.nxt[a], O) for a in cyc}
        from .trimesh import _canon
        expect = {_canon(tri) for ti, tri in enumerate(m1.tris) if m1.visited[ti]}
        expect |= {_canon(f) for f in fan}
        got = {_canon(tri) for tri in m2.tris}
        if expect != got or len(got) != m2.n_triangles:
            raise InvariantError("m2 is not images-of-visited plus fan")
        for a in cyc:
            tb = m1.tri_of(a, self.nxt[a])
            if tb is None or m1.visited[tb]:
                raise InvariantError("front edges do not bound the unvisited region")
            if (self.nxt[a], a) in m1.he and not m1.visited[m1.tri_of(self.nxt[a], a)]:
                raise InvariantError("front edge separates two unvisited triangles")

    def positions2(self) -> list:
        return self.m2.pos


def snap_round_source_vertex(m1: TriMesh, v) -> bool:
    """Round a refinement vertex of the source mesh if no incident triangle degenerates/inverts."""
    p = m1.pos[v]
    try:
        q = tuple(mpq(float(c)) for c in p)
    except OverflowError:
        return False
    if q == tuple(p):
        return True
    P = m1.pos
    for ti in m1.vtris[v]:
        tri = m1.tris[ti]
        old = [P[k] for k in tri]
        new = [q if k == v else P[k] for k in tri]
        if m1.dim == 2:
            if orient2d(*new) <= 0:
                return False
        else:
            n0 = _normal3(*old)
            n1 = _normal3(*new)
            if sum(a * b for a, b in zip(n0, n1)) <= 0:
                return False
    m1.pos[v] = Point2(*q) if m1.dim == 2 else q
    return True


def _normal3(a, b, c):
    u = [y - x for x, y in zip(a, b)]
    w = [y - x for x, y in zip(a, c)]
    return (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])
