"""End-to-end mapping: validate, refine, place the boundary, advance, verify."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .afm import AfmConfig, InvariantError, MapState, init, preprocess_refine
from .domain import BoundaryMap, DomainSpec, map_boundary
from .trimesh import MeshError, TriMesh, assert_disk
from .tutte import count_flips
from .verify import MapStats, VerifyReport, collect_stats, verify_map

__all__ = ["MapResult", "map_mesh"]


@dataclass
class MapResult:
    source: TriMesh
    state: MapState
    bmap: BoundaryMap
    stats: MapStats
    report: Optional[VerifyReport]

    @property
    def m1(self) -> TriMesh:
        return self.state.m1

    @property
    def m2(self) -> TriMesh:
        return self.state.m2


def map_mesh(mesh: TriMesh, spec: DomainSpec, rotation_offset: int = 0,
             config: Optional[AfmConfig] = None, verify: bool = True) -> MapResult:
    """Map a disk mesh onto ``spec``'s polygon.

    Runtime covers refinement, boundary placement and the advancing loop,
    not the final audits.
    """
    assert_disk(mesh)
    t0 = time.perf_counter()
    m1, nsplit = preprocess_refine(mesh)
    bmap = map_boundary(m1, spec, rotation_offset)
    state = init(m1, spec, bmap, config)
    state.log.triangles_in = mesh.n_triangles
    state.log.preprocess_splits = nsplit
    try:
        state.run()
    except MeshError as exc:
        # the input was validated above, so surgery failures are engine bugs
        raise InvariantError(f"mesh surgery failed: {exc}") from exc
    runtime = time.perf_counter() - t0
    flips_double = None
    report = None
    if state.log.converged:
        flips_double = count_flips([(float(x), float(y)) for x, y in state.m2.pos], state.m2)
        if verify:
            report = verify_map(state.m1, state.m2, spec.polygon)
    stats = collect_stats(state.log, runtime, state.m1, state.m2, flips_double)
    return MapResult(mesh, state, bmap, stats, report)
