"""Post-hoc audits of a computed map and run statistics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Optional

from .exact_geom import mpq, orient2d, point_on_segment
from .trimesh import TriMesh, _canon

__all__ = [
    "VerifyReport", "MapStats", "check_injective", "check_source", "check_compatible",
    "check_boundary", "verify_map", "collect_stats", "overlap_oracle", "residual_rational",
]


@dataclass
class VerifyReport:
    inverted: list = field(default_factory=list)        # m2 triangles with orient <= 0
    degenerate_source: list = field(default_factory=list)
    connectivity: list = field(default_factory=list)    # human-readable mismatch details
    boundary: list = field(default_factory=list)        # m2 boundary vertices off the polygon

    @property
    def ok(self) -> bool:
        return not (self.inverted or self.degenerate_source or self.connectivity or self.boundary)

    def merge(self, other: "VerifyReport") -> "VerifyReport":
        for f in fields(self):
            getattr(self, f.name).extend(getattr(other, f.name))
        return self

    def lines(self) -> list:
        out = [f"ok = {str(self.ok).lower()}"]
        out.append(f"inverted_triangles = {len(self.inverted)}")
        out += [f"inverted = {t}" for t in self.inverted[:100]]
        out.append(f"degenerate_source_triangles = {len(self.degenerate_source)}")
        out += [f"degenerate_source = {t}" for t in self.degenerate_source[:100]]
        out += [f"connectivity = {msg}" for msg in self.connectivity]
        out.append(f"boundary_violations = {len(self.boundary)}")
        out += [f"boundary = {v}" for v in self.boundary[:100]]
        return out


def check_injective(m2: TriMesh) -> VerifyReport:
    """Every triangle with a non-positive exact orientation."""
    P = m2.pos
    bad = [ti for ti, (a, b, c) in enumerate(m2.tris) if orient2d(P[a], P[b], P[c]) <= 0]
    return VerifyReport(inverted=bad)


def _cross3(a, b, c):
    u = [y - x for x, y in zip(a, b)]
    w = [y - x for x, y in zip(a, c)]
    return (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])


def check_source(m1: TriMesh) -> VerifyReport:
    """Zero-area source triangles (2D meshes: also clockwise ones)."""
    P = m1.pos
    bad = []
    for ti, (a, b, c) in enumerate(m1.tris):
        if m1.dim == 2:
            if orient2d(P[a], P[b], P[c]) <= 0:
                bad.append(ti)
        elif not any(_cross3(P[a], P[b], P[c])):
            bad.append(ti)
    return VerifyReport(degenerate_source=bad)


def check_compatible(m1: TriMesh, m2: TriMesh) -> VerifyReport:
    msgs = []
    if m1.n_vertices != m2.n_vertices:
        msgs.append(f"vertex count {m1.n_vertices} != {m2.n_vertices}")
    s1 = {_canon(t) for t in m1.tris}
    s2 = {_canon(t) for t in m2.tris}
    missing = len(s1 - s2)
    extra = len(s2 - s1)
    if missing or extra or m1.n_triangles != m2.n_triangles:
        msgs.append(f"triangles missing from target = {missing}, extra in target = {extra}")
    if m1.n_vertices == m2.n_vertices:
        f1 = m1.boundary_flags()
        f2 = m2.boundary_flags()
        diff = [v for v in range(m1.n_vertices) if f1[v] != f2[v]]
        if diff:
            msgs.append(f"boundary flags differ at {len(diff)} vertices (first {diff[0]})")
    return VerifyReport(connectivity=msgs)


def check_boundary(m2: TriMesh, polygon) -> VerifyReport:
    """Boundary vertices of m2 that do not lie on the polygon perimeter."""
    n = len(polygon)
    bad = []
    flags = m2.boundary_flags()
    for v, b in enumerate(flags):
        if not b:
            continue
        p = m2.pos[v]
        if not any(point_on_segment(p, polygon[i], polygon[(i + 1) % n]) for i in range(n)):
            bad.append(v)
    return VerifyReport(boundary=bad)


def verify_map(m1: TriMesh, m2: TriMesh, polygon=None) -> VerifyReport:
    rep = check_injective(m2)
    rep.merge(check_source(m1))
    rep.merge(check_compatible(m1, m2))
    if polygon is not None:
        rep.merge(check_boundary(m2, polygon))
    return rep


# ---------------------------------------------------------------------------
def _signed_area2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _separated(t, u) -> bool:
    """True if some edge line of t or u has t on one closed side and u on the other."""
    for tri, other in ((t, u), (u, t)):
        s = 1 if _signed_area2(*tri) > 0 else -1
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            if all(s * orient2d(a, b, p) <= 0 for p in other):
                return True
    return False


def overlap_oracle(m2: TriMesh, polygon) -> bool:
    """Brute-force injectivity verdict.

    True iff no triangle has zero area, no two triangle interiors overlap
    (pairwise separating-axis test in exact arithmetic), and the signed areas
    sum exactly to the polygon area.
    """
    P = m2.pos
    tris = [tuple(P[k] for k in t) for t in m2.tris]
    if any(_signed_area2(*t) == 0 for t in tris):
        return False
    total = sum((_signed_area2(*t) for t in tris), mpq(0))
    n = len(polygon)
    area = sum((polygon[i][0] * polygon[(i + 1) % n][1] - polygon[(i + 1) % n][0] * polygon[i][1]
                for i in range(n)), mpq(0))
    if total != area:
        return False
    boxes = [(min(p[0] for p in t), max(p[0] for p in t), min(p[1] for p in t), max(p[1] for p in t))
             for t in tris]
    for i in range(len(tris)):
        bi = boxes[i]
        for j in range(i + 1, len(tris)):
            bj = boxes[j]
            if bi[1] <= bj[0] or bj[1] <= bi[0] or bi[3] <= bj[2] or bj[3] <= bi[2]:
                continue
            if not _separated(tris[i], tris[j]):
                return False
    return True


# ---------------------------------------------------------------------------
@dataclass
class MapStats:
    converged: bool = False
    fraction_done: Fraction = Fraction(0)
    moves: int = 0
    triangle_splits: int = 0
    edge_flips: int = 0
    convexifications: int = 0
    concavifications: int = 0
    refine_splits: int = 0              # all source edge splits: preprocessing + convexify refinement
    preprocess_splits: int = 0
    convexify_refine_splits: int = 0
    triangles_in: int = 0
    triangles_out: int = 0
    growth: float = 0.0
    interior_vertices: int = 0
    rational_vertices: int = 0
    snap_attempts: int = 0
    snap_rounded: int = 0
    flips_rational: Optional[int] = None
    flips_double: Optional[int] = None
    reseeds: int = 0
    max_move_seconds: float = 0.0
    runtime: float = 0.0

    def as_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, bool):
                v = str(v).lower()
            elif v is None:
                v = "na"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MapStats":
        kinds = {f.name: f.type for f in fields(cls)}
        out = cls()
        for line in text.splitlines():
            if "=" not in line:
                continue
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in kinds:
                continue
            cur = getattr(out, k)
            if v == "na":
                val = None
            elif k == "converged":
                val = v == "true"
            elif k == "fraction_done":
                val = Fraction(v)
            elif isinstance(cur, float) or k in ("growth", "runtime", "max_move_seconds"):
                val = float(v)
            else:
                val = int(v)
            setattr(out, k, val)
        return out


def residual_rational(m2: TriMesh) -> int:
    """Number of placed m2 vertices whose coordinates are not binary64 values."""
    n = 0
    for p in m2.pos:
        if p is None:
            continue
        for c in p:
            try:
                if mpq(float(c)) != c:
                    n += 1
                    break
            except OverflowError:
                n += 1
                break
    return n


def collect_stats(log, runtime: Optional[float] = None, m1: Optional[TriMesh] = None,
                  m2: Optional[TriMesh] = None, flips_double: Optional[int] = None) -> MapStats:
    """Assemble MapStats from an engine event log (and the meshes, when available)."""
    st = MapStats()
    st.converged = bool(log.converged)
    st.fraction_done = Fraction(log.visited, log.total) if log.total else Fraction(0)
    if st.converged:
        st.fraction_done = Fraction(1)
    elif st.fraction_done >= 1:
        st.fraction_done = Fraction(log.total - 1, log.total)
    st.triangle_splits = log.triangle_splits
    st.edge_flips = log.edge_flips
    st.moves = st.triangle_splits + st.edge_flips
    st.convexifications = log.convexifications
    st.concavifications = log.concavifications
    st.refine_splits = log.refine_splits + log.preprocess_splits
    st.preprocess_splits = log.preprocess_splits
    st.convexify_refine_splits = log.refine_splits
    st.triangles_in = log.triangles_in
    st.snap_attempts = log.snap_attempts
    st.snap_rounded = log.snap_rounded
    st.reseeds = log.reseeds
    st.max_move_seconds = log.max_move_seconds
    st.runtime = log.runtime if runtime is None else runtime
    if m1 is not None:
        st.triangles_out = m1.n_triangles
        flags = m1.boundary_flags()
        st.interior_vertices = sum(1 for v in range(m1.n_vertices) if not flags[v] and m1.vtris[v])
    if st.triangles_in:
        st.growth = (st.triangles_out - st.triangles_in) / st.triangles_in
    if m2 is not None:
        st.rational_vertices = residual_rational(m2)
        if st.converged:
            st.flips_rational = len(check_injective(m2).inverted)
    st.flips_double = flips_double
    return st
