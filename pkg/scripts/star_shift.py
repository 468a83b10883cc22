"""Map the 5-point star outline mesh onto the same star, shifted by one corner.

Fixed-connectivity Tutte inverts triangles; the advancing front refines the
mesh and succeeds. Writes both target meshes as SVG next to --out.
"""
import argparse
from pathlib import Path

from afmap.afm import AfmConfig
from afmap.domain import make_star, map_boundary
from afmap.exact_geom import mpq
from afmap.generate import star_outline_mesh
from afmap.io import render_svg
from afmap.pipeline import map_mesh
from afmap.tutte import flipped_triangles, tutte_embed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--offset", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("star_shift"))
    args = ap.parse_args()

    mesh = star_outline_mesh()
    spec = make_star()
    xy = tutte_embed(mesh, map_boundary(mesh, spec, args.offset))
    bad = flipped_triangles(xy, mesh)
    print(f"tutte: {len(bad)} of {mesh.n_triangles} triangles inverted")

    res = map_mesh(mesh, spec, args.offset, AfmConfig(audit="full", trace_every=1))
    print(res.stats.as_text(), end="")
    print("report ok =", res.report.ok)

    args.out.mkdir(parents=True, exist_ok=True)
    render_svg(args.out / "tutte.svg", [(mpq(x), mpq(y)) for x, y in xy], mesh.tris, spec.polygon)
    render_svg(args.out / "afm.svg", res.m2.pos, res.m2.tris, spec.polygon, res.state.trace,
               res.m2.pos[res.state.O])
    print("wrote", args.out / "tutte.svg", "and", args.out / "afm.svg")


if __name__ == "__main__":
    main()
