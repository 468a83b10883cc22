"""Command line: map, verify, bench, render.

Exit codes: 0 success, 1 input error, 2 timeout, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import statistics
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from multiprocessing import Pool
from pathlib import Path
from typing import Optional

from .afm import AfmConfig, InvariantError
from .domain import DomainError, make_domain, map_boundary
from .exact_geom import mpq
from .generate import CorpusConfig, corpus
from .io import (ObjError, exact_or_float, read_exact, read_obj, render_svg, write_exact,
                 write_obj, write_stats)
from .pipeline import map_mesh
from .trimesh import MeshError, TriMesh, build
from .tutte import count_flips, tutte_embed
from .verify import MapStats, verify_map

log = logging.getLogger("afmap")

EXIT_OK, EXIT_INPUT, EXIT_TIMEOUT, EXIT_INTERNAL = 0, 1, 2, 3
DOMAINS = ("circle", "square", "star")


@dataclass
class RunManifest:
    input: Path
    domain: str = "circle"
    circle_n: int = 64
    star_points: int = 5
    star_ratio: Fraction = Fraction(1, 2)
    rotation_offset: int = 0
    engine: str = "afm"
    seed: int = 0
    timeout: Optional[float] = None
    source_out: Optional[Path] = None
    target_out: Optional[Path] = None
    stats_out: Optional[Path] = None
    render_out: Optional[Path] = None
    trace_every: int = 0

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.engine not in ("afm", "tutte"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.circle_n < 3 or self.star_points < 3:
            raise ValueError("circle-n and star-points must be at least 3")
        if not 0 < self.star_ratio < 1:
            raise ValueError("star-ratio must lie in (0, 1)")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")
        stem = self.input.with_suffix("")
        self.source_out = self.source_out or Path(f"{stem}.source.obj")
        self.target_out = self.target_out or Path(f"{stem}.target.obj")
        self.stats_out = self.stats_out or Path(f"{stem}.stats")
        paths = [self.input, self.source_out, self.target_out, self.stats_out]
        if self.render_out:
            paths.append(self.render_out)
        if len({p.resolve() for p in paths}) != len(paths):
            raise ValueError("input and output paths must be distinct")

    def spec(self):
        return make_domain(self.domain, circle_n=self.circle_n, star_points=self.star_points,
                           star_ratio=mpq(self.star_ratio.numerator, self.star_ratio.denominator))


def _load(path, exact_path=None, reorient=True) -> TriMesh:
    verts, faces = read_obj(path)
    pos = exact_or_float(verts, read_exact(exact_path) if exact_path else None)
    return build(pos, faces, record=False, reorient=reorient)


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".exact")


def _write_mesh(path: Path, mesh: TriMesh, dims: int):
    pos = [tuple(p) + (mpq(0),) * (dims - len(p)) for p in mesh.pos]
    write_obj(path, pos, mesh.tris)
    write_exact(_sidecar(path), mesh.pos)


def cmd_map(m: RunManifest) -> int:
    mesh = _load(m.input)
    spec = m.spec()
    if m.engine == "tutte":
        t0 = time.perf_counter()
        bmap = map_boundary(mesh, spec, m.rotation_offset)
        xy = tutte_embed(mesh, bmap)
        st = MapStats(converged=True, fraction_done=Fraction(1), triangles_in=mesh.n_triangles,
                      triangles_out=mesh.n_triangles, runtime=time.perf_counter() - t0)
        st.flips_double = count_flips(xy, mesh)
        write_obj(m.target_out, [(x, y, 0.0) for x, y in xy], mesh.tris)
        write_stats(m.stats_out, st)
        if m.render_out:
            render_svg(m.render_out, [(mpq(x), mpq(y)) for x, y in xy], mesh.tris, spec.polygon)
        print(st.as_text(), end="")
        return EXIT_OK

    cfg = AfmConfig(move_timeout=m.timeout, trace_every=m.trace_every)
    res = map_mesh(mesh, spec, m.rotation_offset, cfg)
    write_stats(m.stats_out, res.stats)
    print(res.stats.as_text(), end="")
    if not res.stats.converged:
        log.error("advancing move exceeded %.3gs; aborted at %.1f%% done", m.timeout,
                  100 * float(res.stats.fraction_done))
        return EXIT_TIMEOUT
    _write_mesh(m.source_out, res.m1, 3 if res.m1.dim == 3 else 2)
    _write_mesh(m.target_out, res.m2, 3)
    if m.trace_every:
        with open(m.target_out.with_suffix(".trace"), "w") as fh:
            for front in res.state.trace:
                fh.write(" ".join(f"{x!r},{y!r}" for x, y in front) + "\n")
    if m.render_out:
        render_svg(m.render_out, res.m2.pos, res.m2.tris, spec.polygon, res.state.trace,
                   res.m2.pos[res.state.O])
    if not res.report.ok:
        for line in res.report.lines():
            log.error(line)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_verify(args) -> int:
    src = _load(args.source, args.source_exact, reorient=False)
    tgt = _load(args.target, args.target_exact, reorient=False)
    if tgt.dim == 3:
        tgt.pos = [tuple(p[:2]) for p in tgt.pos]
        tgt.dim = 2
    polygon = None
    if args.domain:
        polygon = make_domain(args.domain, circle_n=args.circle_n, star_points=args.star_points,
                              star_ratio=_ratio(args.star_ratio)).polygon
    rep = verify_map(src, tgt, polygon)
    print("\n".join(rep.lines()))
    return EXIT_OK if rep.ok else EXIT_INPUT


def _read_trace(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            pts = [tuple(float(c) for c in tok.split(",")) for tok in line.split()]
            if pts:
                out.append(pts)
    return out


def cmd_render(args) -> int:
    mesh = _load(args.mesh, args.exact, reorient=False)
    if mesh.dim == 3:
        if any(p[2] != 0 for p in mesh.pos):
            raise ObjError("render needs a planar (z = 0) mesh")
        mesh.pos = [tuple(p[:2]) for p in mesh.pos]
    polygon = None
    if args.domain:
        polygon = make_domain(args.domain, circle_n=args.circle_n, star_points=args.star_points,
                              star_ratio=_ratio(args.star_ratio)).polygon
    trace = _read_trace(args.trace) if args.trace else None
    render_svg(args.output, mesh.pos, mesh.tris, polygon, trace)
    return EXIT_OK


# --------------------------------------------------------------------------- bench
def _bench_one(job):
    name, mesh, domain, circle_n, timeout = job
    spec = make_domain(domain, circle_n=circle_n)
    row = {"mesh": name, "domain": domain, "error": ""}
    try:
        res = map_mesh(mesh, spec, config=AfmConfig(move_timeout=timeout))
        row.update(asdict(res.stats))
        row["fraction_done"] = float(res.stats.fraction_done)
        if res.report is not None and not res.report.ok:
            row["error"] = "verify: " + "; ".join(res.report.lines()[:4])
    except (InvariantError, DomainError, MeshError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def aggregate(rows) -> dict:
    """Per-domain summary over converged runs."""
    out = {}
    for dom in sorted({r["domain"] for r in rows}):
        rs = [r for r in rows if r["domain"] == dom]
        ok = [r for r in rs if r.get("converged") and not r["error"]]
        to = [r for r in rs if r.get("converged") is False and not r["error"]]
        moves = sum(r["moves"] for r in ok)
        splits = sum(r["triangle_splits"] for r in ok)
        flips = sum(r["edge_flips"] for r in ok)
        conv = sum(r["convexifications"] for r in ok)
        conc = sum(r["concavifications"] for r in ok)
        growth = [r["growth"] for r in ok]
        fd = [r["flips_double"] or 0 for r in ok]
        att = sum(r["snap_attempts"] for r in ok)
        rnd = sum(r["snap_rounded"] for r in ok)
        a = {
            "inputs": len(rs), "converged": len(ok), "timeouts": len(to),
            "failures": len(rs) - len(ok) - len(to),
            "timeout_avg_done_pct": 100 * statistics.fmean(r["fraction_done"] for r in to) if to else 0.0,
            "moves": moves, "splits": splits, "flips": flips,
            "split_pct": 100 * splits / moves if moves else 0.0,
            "flip_pct": 100 * flips / moves if moves else 0.0,
            "convexifications": conv, "convex_pct": 100 * conv / flips if flips else 0.0,
            "concavifications": conc, "concav_pct": 100 * conc / flips if flips else 0.0,
            "refine_splits": sum(r["refine_splits"] for r in ok),
            "growth_avg_pct": 100 * statistics.fmean(growth) if growth else 0.0,
            "growth_max_pct": 100 * max(growth) if growth else 0.0,
            "flips_rational": sum(r["flips_rational"] or 0 for r in ok),
            "flips_double": sum(fd),
            "flips_double_models": sum(1 for x in fd if x),
            "flips_double_models_pct": 100 * sum(1 for x in fd if x) / len(ok) if ok else 0.0,
            "snap_success_pct": 100 * rnd / att if att else 100.0,
            "runtime_avg": statistics.fmean(r["runtime"] for r in ok) if ok else 0.0,
        }
        out[dom] = a
    return out


def format_aggregate(agg: dict) -> str:
    lines = []
    for dom, a in agg.items():
        for k, v in a.items():
            lines.append(f"{dom}.{k} = {v:.4g}" if isinstance(v, float) else f"{dom}.{k} = {v}")
    return "\n".join(lines) + "\n"


def _corpus_from_dir(path: Path):
    files = sorted(path.glob("*.obj"))
    for f in files:
        verts, faces = read_obj(f)
        yield f.stem, build(verts, faces, record=False)


def run_bench(meshes, domains=DOMAINS, circle_n=64, timeout=None, workers=None):
    jobs = [(name, mesh, d, circle_n, timeout) for name, mesh in meshes for d in domains]
    if not jobs:
        raise ValueError("empty corpus")
    workers = workers or int(os.environ.get("AFM_WORKERS", "1"))
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(_bench_one, jobs, chunksize=1)
    return [_bench_one(j) for j in jobs]


def cmd_bench(args) -> int:
    if args.corpus:
        meshes = list(_corpus_from_dir(Path(args.corpus)))
    else:
        meshes = list(corpus(CorpusConfig(args.count, args.min_tris, args.max_tris, args.seed,
                                          args.frac_3d)))
    if not meshes:
        raise ObjError("empty corpus")
    rows = run_bench(meshes, args.domains.split(","), args.circle_n, args.timeout)
    text = format_aggregate(aggregate(rows))
    Path(args.out).write_text(text)
    if args.runs_csv:
        keys = sorted({k for r in rows for k in r})
        with open(args.runs_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows(rows)
    print(text, end="")
    for r in rows:
        if r["error"]:
            log.error("%s/%s: %s", r["mesh"], r["domain"], r["error"])
    return EXIT_OK


# --------------------------------------------------------------------------- parser
def _ratio(s) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad ratio {s!r}") from exc


def _domain_args(p, required=True):
    p.add_argument("--domain", choices=DOMAINS, default="circle" if required else None)
    p.add_argument("--circle-n", type=int, default=64)
    p.add_argument("--star-points", type=int, default=5)
    p.add_argument("--star-ratio", type=_ratio, default=Fraction(1, 2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afmap", description="Advancing front mapping of disk meshes.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("map", help="map a disk mesh onto a polygon")
    p.add_argument("input", type=Path)
    _domain_args(p)
    p.add_argument("--rotation-offset", type=int, default=0)
    p.add_argument("--engine", choices=("afm", "tutte"), default="afm")
    p.add_argument("--timeout", type=float, default=None, help="abort if one move takes longer (s)")
    p.add_argument("--source-out", type=Path)
    p.add_argument("--target-out", type=Path)
    p.add_argument("--stats-out", type=Path)
    p.add_argument("--render", type=Path, dest="render_out")
    p.add_argument("--trace-every", type=int, default=0)

    p = sub.add_parser("verify", help="audit a source/target pair")
    p.add_argument("source", type=Path)
    p.add_argument("target", type=Path)
    p.add_argument("--source-exact", type=Path)
    p.add_argument("--target-exact", type=Path)
    _domain_args(p, required=False)

    p = sub.add_parser("bench", help="run all domains over a corpus")
    p.add_argument("--corpus", type=Path, help="directory of OBJ disks (else generate)")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--min-tris", type=int, default=200)
    p.add_argument("--max-tris", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frac-3d", type=float, default=0.5)
    p.add_argument("--domains", default=",".join(DOMAINS))
    p.add_argument("--circle-n", type=int, default=64)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--out", type=Path, default=Path("bench.stats"))
    p.add_argument("--runs-csv", type=Path)

    p = sub.add_parser("render", help="SVG of a planar mesh")
    p.add_argument("mesh", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--exact", type=Path)
    p.add_argument("--trace", type=Path)
    _domain_args(p, required=False)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.cmd == "map":
            keys = RunManifest.__dataclass_fields__
            return cmd_map(RunManifest(**{k: v for k, v in vars(args).items() if k in keys}))
        if args.cmd == "verify":
            return cmd_verify(args)
        if args.cmd == "bench":
            return cmd_bench(args)
        return cmd_render(args)
    except InvariantError as exc:
        log.error("internal invariant violated: %s", exc)
        return EXIT_INTERNAL
    except (ValueError, OSError) as exc:
        # MeshError, TopologyError, DomainError, ObjError are all ValueErrors
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
