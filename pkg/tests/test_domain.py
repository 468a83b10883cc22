from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from afmap.domain import (DomainError, kernel_point, kernel_polygon, make_circle, make_square,
                          make_star, map_boundary, perimeter_parameter, sees_all_vertices)
from afmap.exact_geom import Point2, mpq, orient2d
from afmap.generate import fan_mesh, random_disk, star_outline_mesh
from afmap.trimesh import build


def P(x, y):
    return Point2(mpq(x), mpq(y))


def strictly_convex(poly):
    n = len(poly)
    return all(orient2d(poly[i - 1], poly[i], poly[(i + 1) % n]) > 0 for i in range(n))


def inside_all_halfplanes(poly, p):
    # independent oracle: strictly left of every directed edge
    n = len(poly)
    return all(orient2d(poly[i], poly[(i + 1) % n], p) > 0 for i in range(n))


def test_circle_examples():
    c4 = make_circle(4).polygon
    assert c4 == (P(1, 0), P(0, 1), P(-1, 0), P(0, -1)) or all(
        abs(float(a.x) - b[0]) < 1e-12 and abs(float(a.y) - b[1]) < 1e-12
        for a, b in zip(c4, [(1, 0), (0, 1), (-1, 0), (0, -1)]))
    assert strictly_convex(c4)
    assert strictly_convex(make_circle(3).polygon)
    c100 = make_circle(100)
    assert len(c100.polygon) == 100 and strictly_convex(c100.polygon)
    assert inside_all_halfplanes(c100.polygon, c100.kernel)
    with pytest.raises(DomainError):
        make_circle(2)


def test_square():
    sq = make_square()
    assert sq.polygon == (P(0, 0), P(1, 0), P(1, 1), P(0, 1))
    assert sq.kernel == P(Fraction(1, 2), Fraction(1, 2))
    assert orient2d(*sq.polygon[:3]) == 1
    assert orient2d(P(0, 0), P(Fraction(1, 2), 0), P(1, 0)) == 0
    per = sum(abs(b.x - a.x) + abs(b.y - a.y) for a, b in zip(sq.polygon, sq.polygon[1:] + sq.polygon[:1]))
    assert per == 4


def test_star_examples():
    s = make_star(5, mpq(1, 2))
    assert len(s.polygon) == 10
    assert inside_all_halfplanes(s.polygon, P(0, 0))
    assert sees_all_vertices(s.kernel, s.polygon)
    s2 = make_star(5, mpq(999, 1000))
    assert inside_all_halfplanes(s2.polygon, s2.kernel)


def test_regular_star_kernel_never_empty():
    # the center is strictly inside every edge half-plane of a regular star,
    # so even extreme parameters keep a nonempty kernel
    s = make_star(50, mpq(1, 1000))
    assert inside_all_halfplanes(s.polygon, P(0, 0))
    assert sees_all_vertices(s.kernel, s.polygon)


def test_star_bad_parameters():
    with pytest.raises(DomainError):
        make_star(2)
    with pytest.raises(DomainError):
        make_star(5, mpq(1))


def comb():
    # three teeth; no point sees the inside of every tooth
    pts = [(0, 0), (5, 0), (5, 3), (4, 3), (4, 1), (3, 1), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)]
    return [P(x, y) for x, y in pts]


def test_comb_kernel_empty():
    assert len(kernel_polygon(comb())) < 3
    with pytest.raises(DomainError):
        kernel_point(comb())


def test_convex_kernel_is_polygon():
    sq = make_square().polygon
    ker = kernel_polygon(sq)
    assert set(ker) == set(sq)
    assert inside_all_halfplanes(sq, kernel_point(sq))


def test_kernel_with_empty_interior():
    # a "bowtie-like" star whose kernel collapses to a single point
    poly = [P(0, 0), P(2, 0), P(1, 1), P(2, 2), P(0, 2), P(1, 1)]
    with pytest.raises(DomainError):
        kernel_point(poly)


def boundary_invariants(mesh, spec, bm):
    poly = spec.polygon
    params = []
    for p in bm.positions:
        pp = perimeter_parameter(poly, p)
        assert pp is not None, "boundary position off the perimeter"
        params.append(pp)
    # strictly increasing along the perimeter, once around
    assert params == sorted(params)
    assert len(set(params)) == len(params)
    assert set(poly) <= set(bm.positions)
    assert [bm.positions[s] for s in bm.corner_slots] == list(poly)
    assert set(bm.loop) == {v for e in mesh.boundary_edges() for v in e}


def test_map_boundary_square_four_vertices():
    m = build([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)], [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)])
    bm = map_boundary(m, make_square())
    assert sorted(bm.positions) == sorted(make_square().polygon)


def test_map_boundary_uniform_circle():
    m = fan_mesh(12)
    spec = make_circle(12)
    bm = map_boundary(m, spec)
    assert bm.positions == list(spec.polygon)


def test_map_boundary_star_shift():
    m = star_outline_mesh()
    spec = make_star()
    bm0 = map_boundary(m, spec)
    bm1 = map_boundary(m, spec, rotation_offset=1)
    d0, d1 = bm0.as_dict(), bm1.as_dict()
    # vertex 0 is an outer tip: unshifted it sits on a tip, shifted on a concave corner
    assert d0[0] == spec.polygon[0]
    outer = set(spec.polygon[0::2])
    inner = set(spec.polygon[1::2])
    assert all(d1[v] in inner for v in range(0, 10, 2))
    assert all(d1[v] in outer for v in range(1, 10, 2))


def test_map_boundary_too_few_vertices():
    with pytest.raises(DomainError):
        map_boundary(fan_mesh(8), make_circle(64))


@given(st.integers(0, 10**6), st.integers(0, 200), st.sampled_from(["circle", "square", "star"]))
def test_map_boundary_properties(seed, offset, kind):
    m = random_disk(300, seed)
    spec = {"circle": make_circle(64), "square": make_square(), "star": make_star()}[kind]
    bm = map_boundary(m, spec, offset)
    boundary_invariants(m, spec, bm)
