"""Seeded random disk meshes (planar and height-field) and the star outline mesh."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .exact_geom import mpq, orient2d
from .trimesh import TriMesh, assert_disk, build

__all__ = ["CorpusConfig", "random_disk", "corpus", "star_outline_mesh", "fan_mesh", "grid_disk"]


@dataclass
class CorpusConfig:
    count: int = 100
    min_tris: int = 200
    max_tris: int = 20000
    seed: int = 0
    frac_3d: float = 0.5


def random_disk(n_tris: int, seed: int, lift3d: bool = False, min_boundary: int = 64) -> TriMesh:
    """Delaunay triangulation of random points in a random ellipse.

    Boundary points sit on the ellipse at jittered angles, interior points are
    drawn from a mix of uniform and clustered samples so that valences and
    triangle shapes vary. With ``lift3d`` the mesh becomes a height field.
    At least ``min_boundary`` boundary vertices are used so that every
    corner of a 64-gon receives its own vertex.
    """
    rng = np.random.default_rng(seed)
    n_b = max(min_boundary, int(round(1.5 * math.sqrt(n_tris))))
    n_i = max(1, (n_tris - n_b + 2) // 2)
    for _ in range(20):
        ang = np.sort((np.arange(n_b) + rng.uniform(-0.3, 0.3, n_b)) * 2 * np.pi / n_b)
        ax = rng.uniform(0.6, 1.0)
        ay = rng.uniform(0.6, 1.0)
        rot = rng.uniform(0, np.pi)
        bnd = np.column_stack([ax * np.cos(ang), ay * np.sin(ang)])

        n_clu = int(n_i * rng.uniform(0.0, 0.5))
        r = np.sqrt(rng.uniform(0, 1, n_i - n_clu)) * 0.97
        th = rng.uniform(0, 2 * np.pi, n_i - n_clu)
        pts = [np.column_stack([r * np.cos(th), r * np.sin(th)])]
        if n_clu:
            c = rng.uniform(-0.5, 0.5, 2)
            pts.append(c + rng.normal(0, rng.uniform(0.03, 0.2), (n_clu, 2)))
        inner = np.vstack(pts)
        inner = inner[inner[:, 0] ** 2 + inner[:, 1] ** 2 < 0.95 ** 2]
        inner = inner * [ax, ay]
        xy = np.vstack([bnd, inner])
        c, s = math.cos(rot), math.sin(rot)
        xy = xy @ np.array([[c, s], [-s, c]])
        tri = Delaunay(xy)
        faces = tri.simplices
        keep = [f for f in faces if _positive(xy, f)]
        if len(keep) != len(faces):
            continue
        if lift3d:
            k = rng.uniform(1.0, 4.0, 2)
            ph = rng.uniform(0, 2 * np.pi, 2)
            amp = rng.uniform(0.1, 0.6)
            z = amp * np.sin(k[0] * xy[:, 0] + ph[0]) * np.cos(k[1] * xy[:, 1] + ph[1])
            pos = np.column_stack([xy, z])
        else:
            pos = xy
        try:
            m = build(pos.tolist(), faces.tolist(), record=False)
            assert_disk(m)
        except ValueError:
            continue
        return m
    raise RuntimeError("could not generate a valid disk mesh")


def _positive(xy, f) -> bool:
    a, b, c = (tuple(mpq(float(x)) for x in xy[i]) for i in f)
    return orient2d(a, b, c) != 0


def corpus(cfg: CorpusConfig):
    """Yield ``(name, mesh)`` pairs; sizes are log-uniform in [min_tris, max_tris]."""
    rng = np.random.default_rng(cfg.seed)
    for k in range(cfg.count):
        n = int(round(math.exp(rng.uniform(math.log(cfg.min_tris), math.log(cfg.max_tris)))))
        is3d = bool(rng.uniform() < cfg.frac_3d)
        s = int(rng.integers(0, 2 ** 31))
        yield f"disk{k:03d}_{'3d' if is3d else '2d'}_{n}", random_disk(n, s, is3d)


def _inside(poly, q) -> bool:
    # even-odd rule, floats are fine for picking sample points
    x, y = q
    inside = False
    n = len(poly)
    for i in range(n):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % n]
        if (y0 > y) != (y1 > y) and x < x0 + (y - y0) * (x1 - x0) / (y1 - y0):
            inside = not inside
    return inside


def star_outline_mesh(points: int = 5, inner_ratio=mpq(1, 2), ring: int = 5,
                      ring_radius: float = 0.3) -> TriMesh:
    """Delaunay mesh of a star polygon whose boundary vertices are exactly its corners.

    Vertex 0 is the first outer tip (angle pi/2) and boundary vertices
    alternate outer/inner counterclockwise, matching ``make_star``. The
    interior holds the center plus ``ring`` points on a circle of radius
    ``ring_radius * inner_ratio``.
    """
    from .domain import make_star
    spec = make_star(points, inner_ratio)
    poly = [(float(p.x), float(p.y)) for p in spec.polygon]
    r = ring_radius * float(inner_ratio)
    inner = [(0.0, 0.0)] + [(r * math.cos(math.pi / 2 + 2 * math.pi * (k + 0.5) / ring),
                             r * math.sin(math.pi / 2 + 2 * math.pi * (k + 0.5) / ring))
                            for k in range(ring)]
    xy = np.array(poly + inner)
    faces = [f for f in Delaunay(xy).simplices if _inside(poly, tuple(xy[f].mean(axis=0)))]
    pos = [(p.x, p.y) for p in spec.polygon] + inner
    m = build(pos, [[int(v) for v in f] for f in faces])
    assert_disk(m)
    return m


def fan_mesh(k: int, radius: float = 1.0) -> TriMesh:
    """One interior vertex (index k) fanned to a regular k-gon of boundary vertices."""
    pos = [(radius * math.cos(2 * math.pi * i / k), radius * math.sin(2 * math.pi * i / k)) for i in range(k)]
    pos.append((0.0, 0.0))
    return build(pos, [(i, (i + 1) % k, k) for i in range(k)])


def grid_disk(n: int) -> TriMesh:
    """Regular n x n grid of the unit square, split into triangles."""
    pos = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]
    tris = []
    w = n + 1
    for j in range(n):
        for i in range(n):
            a = j * w + i
            tris.append((a, a + 1, a + w + 1))
            tris.append((a, a + w + 1, a + w))
    return build(pos, tris)
