"""Uniform-weight Tutte embedding in binary64, and exact flip counting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .domain import BoundaryMap
from .exact_geom import mpq, orient2d
from .trimesh import TriMesh

__all__ = ["TutteSystem", "tutte_system", "tutte_embed", "count_flips", "flipped_triangles"]

RESIDUAL_TOL = 1e-10


@dataclass
class TutteSystem:
    interior: np.ndarray      # vertex ids of the unknowns
    matrix: sp.csr_matrix     # degree on the diagonal, -1 per interior neighbour
    rhs: np.ndarray           # (n_interior, 2) sums of fixed neighbour positions
    fixed: dict               # boundary vertex -> (x, y) floats


def tutte_system(mesh: TriMesh, bmap: BoundaryMap) -> TutteSystem:
    n = mesh.n_vertices
    fixed = {v: (float(p[0]), float(p[1])) for v, p in zip(bmap.loop, bmap.positions)}
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[list(fixed)] = True
    interior = np.flatnonzero(~is_fixed)
    col = -np.ones(n, dtype=np.int64)
    col[interior] = np.arange(len(interior))

    edges = np.array(sorted(mesh.edges()), dtype=np.int64).reshape(-1, 2)
    i, j = edges[:, 0], edges[:, 1]
    deg = np.bincount(np.concatenate([i, j]), minlength=n)
    both = ~is_fixed[i] & ~is_fixed[j]
    rows = np.concatenate([col[i[both]], col[j[both]], col[interior]])
    cols = np.concatenate([col[j[both]], col[i[both]], col[interior]])
    vals = np.concatenate([-np.ones(2 * both.sum()), deg[interior].astype(float)])
    m = len(interior)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))

    fpos = np.zeros((n, 2))
    for v, p in fixed.items():
        fpos[v] = p
    rhs = np.zeros((m, 2))
    for a, b in ((i, j), (j, i)):
        sel = ~is_fixed[a] & is_fixed[b]
        np.add.at(rhs, col[a[sel]], fpos[b[sel]])
    return TutteSystem(interior, A, rhs, fixed)


def tutte_embed(mesh: TriMesh, bmap: BoundaryMap) -> np.ndarray:
    """Positions (n, 2) with every interior vertex at the average of its neighbours."""
    sysm = tutte_system(mesh, bmap)
    out = np.zeros((mesh.n_vertices, 2))
    for v, p in sysm.fixed.items():
        out[v] = p
    if len(sysm.interior):
        A = sysm.matrix.tocsc()
        x = spsolve(A, sysm.rhs)
        x = np.asarray(x).reshape(-1, 2)
        res = np.linalg.norm(A @ x - sysm.rhs) / max(np.linalg.norm(sysm.rhs), 1e-300)
        if res > RESIDUAL_TOL:
            raise RuntimeError(f"Tutte solve residual {res:.3g} above tolerance")
        out[sysm.interior] = x
    return out


def flipped_triangles(positions, mesh: TriMesh) -> list:
    """Triangles whose binary64 vertices have non-positive orientation.

    A float determinant with a safe error bound decides most triangles;
    the rest are evaluated exactly on the binary64 values.
    """
    P = np.asarray(positions, dtype=float)
    T = np.asarray(mesh.tris, dtype=np.int64).reshape(-1, 3)
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    bound = 8 * 2.0 ** -53 * ((np.abs(a[:, 0]) + np.abs(b[:, 0])) * (np.abs(a[:, 1]) + np.abs(c[:, 1]))
                              + (np.abs(a[:, 1]) + np.abs(b[:, 1])) * (np.abs(a[:, 0]) + np.abs(c[:, 0])))
    sure = (np.abs(det) > bound) & (bound > 1e-280)
    bad = set(np.flatnonzero(sure & (det < 0)).tolist())
    for ti in np.flatnonzero(~sure).tolist():
        pa, pb, pc = ((mpq(float(x)), mpq(float(y))) for x, y in P[T[ti]])
        if orient2d(pa, pb, pc) <= 0:
            bad.add(ti)
    return sorted(bad)


def count_flips(positions, mesh: TriMesh) -> int:
    return len(flipped_triangles(positions, mesh))
