"""Exact rational scalars, points, predicates and constructions.

All coordinates handled by the mapping engine are ``gmpy2.mpq`` rationals,
which are kept in canonical (gcd-reduced, positive denominator) form after
every operation. Nothing in here ever rounds, except :func:`snap_to_double`,
which does so on request and reports the exact value it rounded to.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Sequence

from gmpy2 import mpq

__all__ = [
    "mpq", "Point2", "Segment2", "DegenerateGeometryError",
    "to_exact", "point", "orient2d", "orient2d_filtered", "segment_line_intersection",
    "line_intersection", "point_in_triangle", "is_strictly_convex_quad",
    "affine_combination", "lerp", "snap_to_double", "round_dyadic", "bit_size", "squared_distance",
    "point_on_segment",
]

ZERO = mpq(0)
ONE = mpq(1)


class DegenerateGeometryError(ValueError):
    """A construction received degenerate input (zero-length segment, flat triangle)."""


class Point2(NamedTuple):
    x: mpq
    y: mpq

    def __repr__(self):
        return f"Point2({self.x}, {self.y})"


class Segment2(NamedTuple):
    a: Point2
    b: Point2


def to_exact(value) -> mpq:
    """Convert ints, floats, Fractions, decimal strings or 'p/q' strings exactly.

    Floats are converted bit-exactly (every finite binary64 is a dyadic rational).
    """
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coordinate {value!r}")
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return mpq(Fraction(value))
    return mpq(value)


def point(x, y) -> Point2:
    return Point2(to_exact(x), to_exact(y))


def orient2d(a, b, c) -> int:
    """Sign of the determinant (b - a) x (c - a): +1 CCW, 0 colinear, -1 CW."""
    d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (d > 0) - (d < 0)


# 2**-53, unit roundoff of binary64
_U = 2.0 ** -53
_FILTER_C = 8.0 * _U


def orient2d_filtered(a, b, c, fa, fb, fc) -> int:
    """orient2d with a floating-point fast path.

    ``fa, fb, fc`` are the float approximations (nearest doubles) of the exact
    points ``a, b, c``. The float determinant is trusted only when it clears a
    conservative error bound that accounts for both the input conversion and
    the arithmetic; otherwise the exact determinant decides. The result is
    always identical to :func:`orient2d`.
    """
    ax, ay = fa
    bx, by = fb
    cx, cy = fc
    l = (bx - ax) * (cy - ay)
    r = (by - ay) * (cx - ax)
    det = l - r
    bound = _FILTER_C * ((abs(ax) + abs(bx)) * (abs(ay) + abs(cy))
                         + (abs(ay) + abs(by)) * (abs(ax) + abs(cx)))
    if bound > 1e-280 and abs(det) > bound:
        return 1 if det > 0 else -1
    return orient2d(a, b, c)


def squared_distance(a, b) -> mpq:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy


def lerp(a, b, t) -> Point2:
    """Exact point a + t (b - a)."""
    return Point2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def line_intersection(p1, p2, q1, q2):
    """Intersection of the infinite lines p1p2 and q1q2.

    Returns ``(point, s, t)`` with point = p1 + s (p2 - p1) = q1 + t (q2 - q1),
    or ``None`` when the lines are parallel (or coincide).
    """
    rx = p2[0] - p1[0]
    ry = p2[1] - p1[1]
    sx = q2[0] - q1[0]
    sy = q2[1] - q1[1]
    den = rx * sy - ry * sx
    if den == 0:
        return None
    wx = q1[0] - p1[0]
    wy = q1[1] - p1[1]
    s = (wx * sy - wy * sx) / den
    t = (wx * ry - wy * rx) / den
    return Point2(p1[0] + s * rx, p1[1] + s * ry), s, t


def segment_line_intersection(s, p, q, inclusive: bool = True):
    """Intersection of segment ``s`` with the infinite line through ``p`` and ``q``.

    Returns the exact point, or ``None`` when the line misses the segment, is
    parallel to it, or contains it. With ``inclusive=False`` hits at the
    segment endpoints are reported as misses too.
    """
    a, b = s
    if a[0] == b[0] and a[1] == b[1]:
        raise DegenerateGeometryError("degenerate segment")
    if p[0] == q[0] and p[1] == q[1]:
        raise ValueError("line through coincident points")
    hit = line_intersection(a, b, p, q)
    if hit is None:
        return None
    pt, t, _ = hit
    if inclusive:
        return pt if 0 <= t <= 1 else None
    return pt if 0 < t < 1 else None


def point_in_triangle(p, a, b, c, strict: bool = False) -> bool:
    o = orient2d(a, b, c)
    if o == 0:
        raise DegenerateGeometryError("flat triangle")
    if o < 0:
        raise ValueError("triangle must be counterclockwise")
    s1 = orient2d(a, b, p)
    s2 = orient2d(b, c, p)
    s3 = orient2d(c, a, p)
    if strict:
        return s1 > 0 and s2 > 0 and s3 > 0
    return s1 >= 0 and s2 >= 0 and s3 >= 0


def point_on_segment(p, a, b) -> bool:
    """True iff p lies on the closed segment ab (exact)."""
    if orient2d(a, b, p) != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def is_strictly_convex_quad(a, b, c, d) -> bool:
    return (orient2d(a, b, c) > 0 and orient2d(b, c, d) > 0
            and orient2d(c, d, a) > 0 and orient2d(d, a, b) > 0)


def affine_combination(points: Sequence, weights: Sequence) -> Point2:
    if len(points) != len(weights) or not points:
        raise ValueError("need one weight per point")
    w = [to_exact(x) for x in weights]
    if sum(w) != 1:
        raise ValueError(f"weights sum to {sum(w)}, not 1")
    x = ZERO
    y = ZERO
    for p, wi in zip(points, w):
        x += wi * p[0]
        y += wi * p[1]
    return Point2(x, y)


def snap_to_double(p):
    """Round each coordinate to the nearest binary64.

    Returns ``((fx, fy), exact)`` where ``exact`` is the rational value of the
    rounded pair, so orientations can be re-checked without error.
    """
    try:
        fx = float(p[0])
        fy = float(p[1])
    except OverflowError as exc:
        raise OverflowError("coordinate exceeds binary64 range") from exc
    if not (math.isfinite(fx) and math.isfinite(fy)):
        raise OverflowError("coordinate exceeds binary64 range")
    return (fx, fy), Point2(mpq(fx), mpq(fy))


def round_dyadic(x, bits: int):
    """Nearest rational ``m / 2**s`` to ``x`` with about ``bits`` significant bits."""
    x = mpq(x)
    if x == 0:
        return mpq(0)
    n, d = int(x.numerator), int(x.denominator)
    s = bits - (abs(n).bit_length() - d.bit_length())
    if s >= 0:
        m = (2 * (n << s) + d) // (2 * d)
        return mpq(m, 1 << s)
    m = (2 * n + (d << -s)) // (2 * d << -s)
    return mpq(m << -s)


def bit_size(p) -> int:
    """Total numerator plus denominator bits over the coordinates of ``p``."""
    return sum(int(c.numerator).bit_length() + int(c.denominator).bit_length() for c in map(mpq, p))
