import heapq
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from afmap.exact_geom import Point2, mpq, orient2d
from afmap.generate import fan_mesh, grid_disk, random_disk
from afmap.trimesh import (MeshError, NonManifoldError, TopologyError, _canon,
                           assert_disk, build, connectivity_equal, farthest_interior_vertex)


def tri_mesh():
    return build([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])


def square2():
    return build([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])


def _area2(m, t):
    a, b, c = (m.pos[k] for k in m.tris[t])
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def all_positive(m):
    return all(m.orient(t) > 0 for t in range(m.n_triangles))


# --- build ----------------------------------------------------------------
def test_build_single_triangle():
    m = tri_mesh()
    assert len(m.boundary_edges()) == 3
    assert len(m.boundary_loops()) == 1


def test_build_two_triangles():
    m = square2()
    interior = [e for e in m.edges() if not m.is_boundary_edge(*e)]
    assert interior == [(0, 2)]
    assert len(m.boundary_edges()) == 4


def test_build_non_manifold():
    with pytest.raises(NonManifoldError):
        build([(0, 0), (1, 0), (0, 1), (0, -1), (1, 1)], [(0, 1, 2), (0, 1, 3), (0, 1, 4)])


def test_build_repairs_orientation():
    # second triangle given clockwise: propagation flips it
    m = build([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 3, 2)])
    assert all_positive(m)


def test_build_rejects_bad_input():
    with pytest.raises(MeshError):
        build([], [])
    with pytest.raises(MeshError):
        build([(0, 0), (1, 0), (0, 1)], [(0, 1, 3)])
    with pytest.raises(MeshError):
        build([(0, 0), (1, 0), (0, 1)], [(0, 1, 1)])


def test_build_non_orientable():
    # Moebius band: three quads whose last one joins the ends with a twist
    pos = [(math.cos(k), math.sin(k), 0.1 * k) for k in range(6)]
    tris = [(0, 1, 3), (1, 4, 3), (1, 2, 4), (2, 5, 4), (2, 3, 5), (3, 0, 5)]
    with pytest.raises(MeshError, match="non-orientable"):
        build(pos, tris)


# --- assert_disk ----------------------------------------------------------
def test_assert_disk_fan():
    assert_disk(fan_mesh(5))


def annulus():
    pos, tris = [], []
    n = 8
    for k in range(n):
        a = 2 * math.pi * k / n
        pos.append((2 * math.cos(a), 2 * math.sin(a)))
        pos.append((math.cos(a), math.sin(a)))
    for k in range(n):
        o, i = 2 * k, 2 * k + 1
        o2, i2 = (2 * k + 2) % (2 * n), (2 * k + 3) % (2 * n)
        tris += [(o, o2, i2), (o, i2, i)]
    return build(pos, tris)


def test_assert_disk_errors():
    with pytest.raises(TopologyError):
        assert_disk(annulus())
    two = build([(0, 0), (1, 0), (0, 1), (5, 5), (6, 5), (5, 6)], [(0, 1, 2), (3, 4, 5)])
    with pytest.raises(TopologyError):
        assert_disk(two)


# --- surgeries --------------------------------------------------------------
def test_split_interior_edge():
    m = square2()
    v = m.split_edge(0, 2, mpq(1, 2))
    assert m.n_triangles == 4 and m.n_vertices == 5 and v == 4
    assert m.pos[v] == Point2(mpq(1, 2), mpq(1, 2))
    assert all_positive(m)
    m.audit()


def test_split_boundary_edge():
    m = square2()
    before = len(m.boundary_loops()[0])
    m.split_edge(0, 1, mpq(1, 2))
    assert m.n_triangles == 3
    assert len(m.boundary_loops()[0]) == before + 1
    m.audit()


def test_split_edge_quarter_equilateral():
    h = Fraction(866025403784439, 10**15)  # rational stand-in for sqrt(3)/2
    m = build([(0, 0), (1, 0), (Fraction(1, 2), h)], [(0, 1, 2)])
    v = m.split_edge(0, 1, mpq(1, 4))
    P = m.pos
    # child determinants by hand: (1/4)*h and (3/4)*h, both positive
    dets = []
    for t in m.tris:
        a, b, c = (P[k] for k in t)
        dets.append((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    assert sorted(dets) == sorted([mpq(1, 4) * mpq(h), mpq(3, 4) * mpq(h)])
    assert v == 3


def test_split_edge_bad_parameter():
    m = square2()
    for t in (0, 1, mpq(3, 2)):
        with pytest.raises(ValueError):
            m.split_edge(0, 2, t)


def test_split_triangle():
    m = tri_mesh()
    m.split_triangle(0, Point2(mpq(1, 4), mpq(1, 4)))
    assert m.n_triangles == 3 and all_positive(m)
    m = tri_mesh()
    m.split_triangle(0, Point2(mpq(1, 3), mpq(1, 3)))
    assert {_area2(m, t) for t in range(3)} == {mpq(1, 3)}
    with pytest.raises(ValueError):
        tri_mesh().split_triangle(0, Point2(mpq(0), mpq(0)))


def test_split_triangle_3d_barycentric_check():
    m = build([(0, 0, 0), (1, 0, 1), (0, 1, 2)], [(0, 1, 2)])
    m.split_triangle(0, (mpq(1, 3), mpq(1, 3), mpq(1)))
    with pytest.raises(ValueError):
        build([(0, 0, 0), (1, 0, 1), (0, 1, 2)], [(0, 1, 2)]).split_triangle(0, (mpq(1), mpq(1), mpq(3)))


def test_flip_square():
    m = square2()
    m.flip_edge(0, 2)
    assert m.has_edge(1, 3) and not m.has_edge(0, 2)
    assert all_positive(m)


def test_flip_dart_strict():
    m = build([(0, 0), (4, 0), (1, 1), (0, 4)], [(0, 1, 2), (0, 2, 3)])
    with pytest.raises(ValueError):
        m.flip_edge(0, 2)


def test_flip_boundary_edge():
    with pytest.raises(MeshError):
        square2().flip_edge(0, 1)


def test_flip_twice_is_identity():
    m = square2()
    ref = m.copy()
    m.flip_edge(0, 2)
    m.flip_edge(1, 3)
    assert connectivity_equal(m, ref)


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 10**6)), min_size=1, max_size=40))
def test_random_surgery_keeps_positive_and_replays(ops):
    m = grid_disk(3)
    start = m.copy(record=False)
    for kind, r in ops:
        edges = sorted(m.edges())
        if kind == 0:
            i, j = edges[r % len(edges)]
            m.split_edge(i, j, mpq(1 + r % 7, 8))
        elif kind == 1:
            ti = r % m.n_triangles
            a, b, c = (m.pos[k] for k in m.tris[ti])
            w = [mpq(1 + r % 5), mpq(1 + r % 3), mpq(1)]
            s = sum(w)
            m.split_triangle(ti, Point2(*(sum(wi * p[d] for wi, p in zip(w, (a, b, c))) / s for d in (0, 1))))
        else:
            inner = [e for e in edges if not m.is_boundary_edge(*e)]
            i, j = inner[r % len(inner)]
            t1, t2 = m.tri_of(i, j), m.tri_of(j, i)
            x, y = m._third(t1, i, j), m._third(t2, j, i)
            P = m.pos
            if (not m.has_edge(x, y) and orient2d(P[i], P[y], P[j]) > 0 and orient2d(P[y], P[j], P[x]) > 0
                    and orient2d(P[j], P[x], P[i]) > 0 and orient2d(P[x], P[i], P[y]) > 0):
                m.flip_edge(i, j)
        m.audit()
        assert all_positive(m)
    assert_disk(m)
    start.replay(m.records)
    assert connectivity_equal(start, m)
    assert {_canon(t) for t in start.tris} == {_canon(t) for t in m.tris}


# --- farthest_interior_vertex ---------------------------------------------
def _oracle_farthest(m):
    # all-pairs: for each interior vertex, its own Dijkstra to the nearest boundary vertex
    flags = m.boundary_flags()
    fp = [tuple(float(c) for c in p) for p in m.pos]
    best, arg = -1.0, None
    for s in range(m.n_vertices):
        if flags[s]:
            continue
        dist = {s: 0.0}
        heap = [(0.0, s)]
        d_b = math.inf
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            if flags[v]:
                d_b = d
                break
            for w in m.neighbors(v):
                nd = d + math.dist(fp[v], fp[w])
                if nd < dist.get(w, math.inf):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        if d_b > best:
            best, arg = d_b, s
    return arg, best


def test_farthest_fan():
    assert farthest_interior_vertex(fan_mesh(7)) == 7


def test_farthest_grid():
    m = grid_disk(6)
    v = farthest_interior_vertex(m)
    assert m.pos[v] == Point2(mpq(1, 2), mpq(1, 2))
    assert v == _oracle_farthest(m)[0]


def test_farthest_sliver_strip():
    # a long strip two triangles tall: the middle row's interior vertices
    pos = [(i, 0) for i in range(9)] + [(i, 1) for i in range(9)] + [(i, 2) for i in range(9)]
    tris = []
    for r in range(2):
        for i in range(8):
            a = r * 9 + i
            tris += [(a, a + 1, a + 10), (a, a + 10, a + 9)]
    m = build(pos, tris)
    v = farthest_interior_vertex(m)
    assert v == _oracle_farthest(m)[0]
    assert m.pos[v][1] == 1


def test_farthest_matches_oracle_random():
    for seed in range(5):
        m = random_disk(600, seed, min_boundary=8)
        assert m.n_vertices <= 500
        v = farthest_interior_vertex(m)
        ov, best = _oracle_farthest(m)
        flags = m.boundary_flags()
        assert not flags[v]
        # same distance (the index may only differ on exact ties)
        assert v == ov


def test_farthest_no_interior():
    with pytest.raises(TopologyError):
        farthest_interior_vertex(tri_mesh())


# --- connectivity_equal ---------------------------------------------------
def test_connectivity_equal():
    m = square2()
    assert connectivity_equal(m, m)
    f = m.copy()
    f.flip_edge(0, 2)
    assert not connectivity_equal(m, f)
    g = m.copy()
    g.pos = [Point2(p.x * 3, p.y + 1) for p in g.pos]
    assert connectivity_equal(m, g)


def test_build_keep_order_for_audits():
    m = build([(0, 0), (1, 0), (0, 1), (1, 1)], [(0, 2, 1), (1, 2, 3)], reorient=False)
    assert m.tris[0] == (0, 2, 1)
    assert m.orient(0) < 0
