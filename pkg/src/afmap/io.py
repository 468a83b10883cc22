"""OBJ / exact-coordinate sidecar / stats / SVG input and output."""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .exact_geom import mpq, orient2d

__all__ = [
    "ObjError", "read_obj", "write_obj", "write_exact", "read_exact", "write_stats",
    "read_stats", "render_svg", "exact_or_float",
]


class ObjError(ValueError):
    pass


def read_obj(path) -> tuple:
    """Vertices (lists of floats, 2 or 3 coords) and 0-based triangles from an OBJ file.

    Only ``v`` and ``f`` records are interpreted; faces must be triangles.
    Face entries may use the ``v/vt/vn`` form and negative indices.
    """
    verts, faces = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                try:
                    xyz = [float(x) for x in parts[1:4]]
                except ValueError as exc:
                    raise ObjError(f"line {ln}: bad vertex") from exc
                if len(xyz) < 2:
                    raise ObjError(f"line {ln}: vertex needs at least 2 coordinates")
                verts.append(xyz)
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ObjError(f"line {ln}: only triangular faces are supported")
                idx = []
                for tok in parts[1:]:
                    try:
                        k = int(tok.split("/")[0])
                    except ValueError as exc:
                        raise ObjError(f"line {ln}: bad face index") from exc
                    idx.append(k - 1 if k > 0 else len(verts) + k)
                faces.append(tuple(idx))
    if not faces:
        raise ObjError("no faces")
    return verts, faces


def write_obj(path, positions, faces):
    """Write floats with shortest round-trip repr (exact rationals are rounded to nearest)."""
    with open(path, "w") as fh:
        for p in positions:
            fh.write("v " + " ".join(repr(float(c)) for c in p) + "\n")
        for a, b, c in faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def write_exact(path, positions):
    """One vertex per line, each coordinate as ``numerator/denominator`` in lowest terms."""
    with open(path, "w") as fh:
        for p in positions:
            fh.write(" ".join(f"{c.numerator}/{c.denominator}" for c in map(mpq, p)) + "\n")


def read_exact(path) -> list:
    out = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                out.append(tuple(mpq(Fraction(tok)) for tok in parts))
            except (ValueError, ZeroDivisionError) as exc:
                raise ObjError(f"exact sidecar line {ln}: bad rational") from exc
    return out


def exact_or_float(obj_positions, exact=None) -> list:
    """Exact coordinates from a sidecar when available, else the OBJ floats."""
    if exact is not None:
        if len(exact) != len(obj_positions):
            raise ObjError("sidecar and OBJ vertex counts differ")
        return exact
    return obj_positions


def write_stats(path, stats):
    Path(path).write_text(stats.as_text())


def read_stats(path):
    from .verify import MapStats
    return MapStats.from_text(Path(path).read_text())


def render_svg(path, positions, tris, polygon=None, trace=None, origin=None, size: int = 800):
    """Triangle edges in grey, inverted triangles filled red, optional front trace overlay."""
    fp = [(float(p[0]), float(p[1])) for p in positions if p is not None]
    if not fp:
        raise ValueError("nothing to render")
    xs = [p[0] for p in fp]
    ys = [p[1] for p in fp]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    pad = 0.03 * span
    scale = size / (span + 2 * pad)

    def tx(p):
        return f"{(float(p[0]) - x0 + pad) * scale:.3f},{(y1 - float(p[1]) + pad) * scale:.3f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}">',
           '<rect width="100%" height="100%" fill="white"/>']
    for a, b, c in tris:
        pa, pb, pc = positions[a], positions[b], positions[c]
        bad = orient2d(*(tuple(mpq(x) for x in p[:2]) for p in (pa, pb, pc))) <= 0
        fill = "#e03030" if bad else "none"
        out.append(f'<polygon points="{tx(pa)} {tx(pb)} {tx(pc)}" fill="{fill}" '
                   f'stroke="#555" stroke-width="0.4"/>')
    if polygon is not None:
        pts = " ".join(tx(p) for p in polygon)
        out.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    for k, front in enumerate(trace or []):
        pts = " ".join(tx(p) for p in front)
        out.append(f'<polygon points="{pts}" fill="none" stroke="#2060d0" stroke-width="0.8" '
                   f'stroke-opacity="{0.3 + 0.7 * (k + 1) / len(trace):.2f}"/>')
    if origin is not None:
        x, y = tx(origin).split(",")
        out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="#20a040"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
