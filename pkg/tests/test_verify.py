from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from afmap.afm import AfmConfig
from afmap.domain import make_circle, make_square, make_star
from afmap.exact_geom import Point2, mpq
from afmap.generate import fan_mesh, random_disk, star_outline_mesh
from afmap.pipeline import map_mesh
from afmap.trimesh import build
from afmap.verify import (MapStats, VerifyReport, check_boundary, check_compatible, check_injective,
                          check_source, overlap_oracle, verify_map)


def P(x, y):
    return Point2(mpq(x), mpq(y))


def square_fan():
    pos = [P(0, 0), P(1, 0), P(1, 1), P(0, 1), P(F(1, 2), F(1, 2))]
    return build(pos, [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)], reorient=False)


def test_empty_report_on_valid_map():
    m = square_fan()
    rep = verify_map(m, m.copy(), make_square().polygon)
    assert rep.ok and rep.lines()[0] == "ok = true"


def test_hand_inverted_triangle():
    m = square_fan()
    bad = m.copy()
    bad.pos[4] = P(F(1, 2), F(-1, 4))   # pushes the centre through edge (0, 1)
    assert check_injective(bad).inverted == [0]


def test_zero_area_triangle():
    m = square_fan()
    bad = m.copy()
    bad.pos[4] = P(F(1, 2), 0)
    assert check_injective(bad).inverted == [0]
    assert check_source(bad).degenerate_source == [0]


def test_degenerate_3d_source():
    pos = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 1, 1)]
    m = build([tuple(mpq(c) for c in p) for p in pos], [(0, 1, 3), (1, 2, 3)], reorient=False)
    assert check_source(m).degenerate_source == []
    m.pos[3] = (mpq(3), mpq(0), mpq(0))
    assert check_source(m).degenerate_source == [0, 1]


def test_extra_flip_detected():
    m = square_fan()
    m2 = m.copy()
    # flip the diagonal of the quad (1, 2, 4) / (0, 1, 4) through edge 1-4
    m2.flip_edge(1, 4, strict=False)
    rep = check_compatible(m, m2)
    assert rep.connectivity and "missing" in rep.connectivity[0]


def test_vertex_count_mismatch():
    a = fan_mesh(6)
    b = fan_mesh(7)
    rep = check_compatible(a, b)
    assert any("vertex count" in s for s in rep.connectivity)


def test_boundary_conformity():
    m = square_fan()
    assert not check_boundary(m, make_square().polygon).boundary
    m.pos[1] = P(F(11, 10), 0)
    assert check_boundary(m, make_square().polygon).boundary == [1]


def test_truncated_run_reports_missing():
    m = random_disk(1500, 9)
    res = map_mesh(m, make_circle(64), config=AfmConfig(move_timeout=1e-12))
    assert not res.stats.converged
    st_ = res.state
    placed = st_.m2
    rep = check_compatible(st_.m1, placed)
    assert rep.connectivity and "missing" in " ".join(rep.connectivity)


def test_report_merge_and_lines():
    a = VerifyReport(inverted=[3])
    a.merge(VerifyReport(boundary=[7], connectivity=["x"]))
    lines = a.lines()
    assert "ok = false" in lines and "inverted = 3" in lines and "boundary = 7" in lines


# ---------------------------------------------------------------- stats
def test_fan_stats():
    res = map_mesh(fan_mesh(16), make_circle(16))
    s = res.stats
    assert s.triangle_splits == 0 and s.convexifications == 0 and s.converged
    assert s.growth == 0 and s.fraction_done == 1


def test_star_shift_stats():
    res = map_mesh(star_outline_mesh(), make_star(), rotation_offset=1)
    s = res.stats
    assert s.converged and res.report.ok
    assert s.refine_splits > 0 and s.growth > 0
    assert s.refine_splits == s.preprocess_splits + s.convexify_refine_splits


def test_aborted_stats():
    res = map_mesh(random_disk(800, 1), make_square(), config=AfmConfig(move_timeout=1e-12))
    s = res.stats
    assert not s.converged and 0 <= s.fraction_done < 1
    assert s.flips_rational is None


def test_stats_text_round_trip():
    res = map_mesh(random_disk(300, 4, lift3d=True), make_star())
    s = res.stats
    back = MapStats.from_text(s.as_text())
    assert back == s


@given(st.integers(0, 10**6), st.sampled_from([make_circle(64), make_square(), make_star()]))
@settings(max_examples=20)
def test_stats_identities(seed, spec):
    mesh = random_disk(300, seed, lift3d=seed % 2 == 0)
    res = map_mesh(mesh, spec)
    s = res.stats
    assert s.moves == s.triangle_splits + s.edge_flips
    assert s.growth >= 0
    assert s.growth == (s.triangles_out - s.triangles_in) / s.triangles_in
    assert s.triangles_out == res.m1.n_triangles == res.m2.n_triangles
    assert (s.fraction_done == 1) == s.converged
    assert s.flips_rational == 0


# ---------------------------------------------------------------- oracle
def test_oracle_valid_and_overlap():
    m = square_fan()
    sq = make_square().polygon
    assert overlap_oracle(m, sq)
    bad = m.copy()
    bad.pos[4] = P(F(1, 2), F(-1, 4))
    assert not overlap_oracle(bad, sq)


def test_oracle_folded_but_positive_area_sum():
    # every triangle is positive but the fan winds twice around the centre
    import math
    k = 7
    pos = [P(mpq(round(1000 * math.cos(4 * math.pi * i / k)), 1000), mpq(round(1000 * math.sin(4 * math.pi * i / k)), 1000))
           for i in range(k)] + [P(0, 0)]
    m = build(pos, [(i, (i + 1) % k, k) for i in range(k)], reorient=False)
    assert check_injective(m).ok
    assert not overlap_oracle(m, make_circle(7).polygon)
