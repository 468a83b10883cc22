"""Run the engine over a generated corpus on all three domains and print a per-domain summary.

Set AFM_WORKERS to use several processes.
"""
import argparse
import csv
import time
from pathlib import Path

from afmap.cli import aggregate, format_aggregate, run_bench
from afmap.generate import CorpusConfig, corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--min-tris", type=int, default=200)
    ap.add_argument("--max-tris", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--timeout", type=float, default=None)
    ap.add_argument("--out", type=Path, default=Path("bench_out"))
    args = ap.parse_args()

    t0 = time.perf_counter()
    meshes = list(corpus(CorpusConfig(args.count, args.min_tris, args.max_tris, args.seed)))
    rows = run_bench(meshes, timeout=args.timeout)
    agg = aggregate(rows)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "summary.stats").write_text(format_aggregate(agg))
    with open(args.out / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=sorted({k for r in rows for k in r}))
        w.writeheader()
        w.writerows(rows)

    cols = ["converged", "moves", "split_pct", "flip_pct", "convex_pct", "concav_pct",
            "growth_avg_pct", "growth_max_pct", "flips_rational", "flips_double_models_pct",
            "snap_success_pct", "runtime_avg"]
    print(f"{'':22}" + "".join(f"{d:>12}" for d in agg))
    for c in cols:
        vals = [agg[d][c] for d in agg]
        print(f"{c:22}" + "".join(f"{v:12.4g}" if isinstance(v, float) else f"{v:12d}" for v in vals))
    print(f"total {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
