"""Target domains: rational circle/square/star polygons, kernels, boundary maps."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .exact_geom import (Point2, line_intersection, mpq, orient2d, point_on_segment,
                         to_exact)
from .trimesh import TopologyError, TriMesh

__all__ = [
    "DomainError", "DomainSpec", "BoundaryMap", "make_circle", "make_square",
    "make_star", "make_domain", "kernel_polygon", "kernel_point", "map_boundary",
    "sees_all_vertices", "is_simple_polygon", "perimeter_parameter",
]

# trig values are rounded to multiples of 2**-40
_GRID = 2 ** 40


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    polygon: tuple
    kernel: Point2
    params: dict = field(default_factory=dict)


@dataclass
class BoundaryMap:
    """Target positions for the boundary loop of a mesh, in loop order."""

    loop: list
    positions: list
    corner_slots: list  # loop positions that sit on polygon corners

    def as_dict(self) -> dict:
        return dict(zip(self.loop, self.positions))


def _q(x: float) -> mpq:
    return mpq(round(x * _GRID), _GRID)


def _unit(theta: float) -> Point2:
    return Point2(_q(math.cos(theta)), _q(math.sin(theta)))


def _check_strictly_convex(poly):
    n = len(poly)
    for i in range(n):
        if orient2d(poly[i - 1], poly[i], poly[(i + 1) % n]) <= 0:
            raise DomainError(f"rounding broke strict convexity at corner {i}")


def make_circle(n: int) -> DomainSpec:
    """Strictly convex n-gon inscribed (up to 2**-40 rounding) in the unit circle."""
    if n < 3:
        raise DomainError("a circle polygon needs at least 3 corners")
    poly = tuple(_unit(2 * math.pi * k / n) for k in range(n))
    _check_strictly_convex(poly)
    return DomainSpec("circle", poly, kernel_point(poly), {"n": n})


def make_square() -> DomainSpec:
    poly = (Point2(mpq(0), mpq(0)), Point2(mpq(1), mpq(0)),
            Point2(mpq(1), mpq(1)), Point2(mpq(0), mpq(1)))
    return DomainSpec("square", poly, kernel_point(poly), {})


def make_star(points: int = 5, inner_ratio=mpq(1, 2)) -> DomainSpec:
    """Star with ``2 * points`` corners alternating between radius 1 and ``inner_ratio``."""
    if points < 3:
        raise DomainError("a star needs at least 3 points")
    r = to_exact(inner_ratio)
    if not 0 < r < 1:
        raise DomainError("inner_ratio must lie in (0, 1)")
    poly = []
    for k in range(points):
        th = math.pi / 2 + 2 * math.pi * k / points
        poly.append(_unit(th))
        u = _unit(th + math.pi / points)
        poly.append(Point2(r * u.x, r * u.y))
    poly = tuple(poly)
    if not is_simple_polygon(poly):
        raise DomainError("star polygon self-intersects")
    return DomainSpec("star", poly, kernel_point(poly),
                      {"points": points, "inner_ratio": r})


def make_domain(kind: str, circle_n: int = 64, star_points: int = 5,
                star_ratio=mpq(1, 2)) -> DomainSpec:
    if kind == "circle":
        return make_circle(circle_n)
    if kind == "square":
        return make_square()
    if kind == "star":
        return make_star(star_points, star_ratio)
    raise DomainError(f"unknown domain kind {kind!r}")


def _segments_cross(p1, p2, q1, q2) -> bool:
    o1 = orient2d(p1, p2, q1)
    o2 = orient2d(p1, p2, q2)
    o3 = orient2d(q1, q2, p1)
    o4 = orient2d(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return ((o1 == 0 and point_on_segment(q1, p1, p2)) or (o2 == 0 and point_on_segment(q2, p1, p2))
            or (o3 == 0 and point_on_segment(p1, q1, q2)) or (o4 == 0 and point_on_segment(p2, q1, q2)))


def is_simple_polygon(poly) -> bool:
    n = len(poly)
    if n < 3:
        return False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, poly[j], poly[(j + 1) % n]):
                return False
    return True


def _clip(subject, p, q):
    """Part of convex polygon ``subject`` on the closed left side of line p->q."""
    out = []
    n = len(subject)
    for i in range(n):
        cur, nxt = subject[i], subject[(i + 1) % n]
        sc = orient2d(p, q, cur)
        sn = orient2d(p, q, nxt)
        if sc >= 0:
            out.append(cur)
        if sc * sn < 0:
            out.append(line_intersection(cur, nxt, p, q)[0])
    return _cleanup(out)


def _cleanup(poly):
    pts = []
    for p in poly:
        if not pts or pts[-1] != p:
            pts.append(p)
    while len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        for i in range(len(pts)):
            if orient2d(pts[i - 1], pts[i], pts[(i + 1) % len(pts)]) == 0:
                del pts[i]
                changed = True
                break
    return pts


def kernel_polygon(polygon) -> list:
    """Kernel of a CCW simple polygon by exact half-plane clipping (may be empty)."""
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    box = [Point2(min(xs), min(ys)), Point2(max(xs), min(ys)),
           Point2(max(xs), max(ys)), Point2(min(xs), max(ys))]
    ker = box
    n = len(polygon)
    for i in range(n):
        ker = _clip(ker, polygon[i], polygon[(i + 1) % n])
        if len(ker) < 3:
            return ker
    return ker


def kernel_point(polygon) -> Point2:
    """Vertex centroid of the kernel; raises ``DomainError`` if the kernel has no interior."""
    ker = kernel_polygon(polygon)
    if len(ker) < 3:
        raise DomainError("polygon kernel is empty (not star-shaped) or degenerate")
    n = len(ker)
    c = Point2(sum((p[0] for p in ker), mpq(0)) / n, sum((p[1] for p in ker), mpq(0)) / n)
    for i in range(len(polygon)):
        if orient2d(polygon[i], polygon[(i + 1) % len(polygon)], c) <= 0:
            raise DomainError("kernel has empty interior")
    return c


def sees_all_vertices(k, polygon) -> bool:
    """Visibility audit: every segment from ``k`` to a corner stays inside the polygon.

    Checked by asserting the open segment crosses no polygon edge and ``k`` is
    strictly left of every edge it could see past.
    """
    n = len(polygon)
    for i, v in enumerate(polygon):
        for j in range(n):
            a, b = polygon[j], polygon[(j + 1) % n]
            if j == i or (j + 1) % n == i:
                # edges at v: k must be strictly on their inner side
                if orient2d(a, b, k) <= 0:
                    return False
                continue
            if _segments_cross(k, v, a, b):
                return False
    return True


def perimeter_parameter(polygon, p):
    """(edge index, exact parameter along that edge) for a point on the perimeter, else None."""
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        if point_on_segment(p, a, b):
            if a[0] != b[0]:
                t = (p[0] - a[0]) / (b[0] - a[0])
            else:
                t = (p[1] - a[1]) / (b[1] - a[1])
            if t == 1:
                return ((i + 1) % n, mpq(0))
            return (i, t)
    return None


def _flen(a, b) -> float:
    return math.hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1]))


def map_boundary(mesh: TriMesh, spec: DomainSpec, rotation_offset: int = 0) -> BoundaryMap:
    """Place the boundary loop on the polygon perimeter by chord-length parameter.

    Polygon corners each receive the mapped vertex nearest to them in
    perimeter parameter (monotone, one vertex per corner), the remaining
    vertices are spread along the polygon edge between their two corners.
    """
    loops = mesh.boundary_loops()
    if len(loops) != 1:
        raise TopologyError(f"expected one boundary loop, found {len(loops)}")
    loop = loops[0]
    nb = len(loop)
    poly = spec.polygon
    nc = len(poly)
    if nb < nc:
        raise DomainError(f"{nb} boundary vertices cannot cover {nc} polygon corners")
    r = rotation_offset % nb
    loop = loop[r:] + loop[:r]

    fp = [tuple(float(c) for c in mesh.pos[v]) for v in loop]
    acc = [0.0]
    for i in range(nb):
        acc.append(acc[-1] + math.dist(fp[i], fp[(i + 1) % nb]))
    total = acc[-1]
    if total <= 0:
        raise DomainError("boundary has zero length")
    s = [x / total for x in acc[:nb]]

    pacc = [0.0]
    for i in range(nc):
        pacc.append(pacc[-1] + _flen(poly[i], poly[(i + 1) % nc]))
    cpar = [x / pacc[-1] for x in pacc[:nc]]

    slots = [0]
    for k in range(1, nc):
        lo = slots[-1] + 1
        hi = nb - (nc - k)
        j = bisect.bisect_left(s, cpar[k], lo, hi + 1)
        cands = [c for c in (j - 1, j) if lo <= c <= hi] or [min(max(j, lo), hi)]
        slots.append(min(cands, key=lambda c: (abs(s[c] - cpar[k]), c)))
    if len(set(slots)) != nc:
        raise DomainError("duplicate corner snap target")

    positions = [None] * nb
    for k in range(nc):
        j0 = slots[k]
        j1 = slots[k + 1] if k + 1 < nc else nb
        a, b = poly[k], poly[(k + 1) % nc]
        positions[j0] = a
        s0 = s[j0]
        s1 = s[j1] if j1 < nb else 1.0
        count = j1 - j0 - 1
        if count == 0:
            continue
        rhos = []
        for j in range(j0 + 1, j1):
            rho = (s[j] - s0) / (s1 - s0) if s1 > s0 else 0.0
            rhos.append(mpq(round(rho * 2 ** 30), 2 ** 30))
        ok = all(0 < x < 1 for x in rhos) and all(x < y for x, y in zip(rhos, rhos[1:]))
        if not ok:
            rhos = [mpq(i + 1, count + 1) for i in range(count)]
        for j, rho in zip(range(j0 + 1, j1), rhos):
            positions[j] = Point2(a[0] + rho * (b[0] - a[0]), a[1] + rho * (b[1] - a[1]))
    return BoundaryMap(loop, positions, slots)
