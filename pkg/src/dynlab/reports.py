"""Deterministic report emission: JSON, CSV summaries, and static SVG plots.

Everything here is byte-reproducible: keys are sorted, floats are printed
with fixed significant digits (17 in JSON, 12 in CSV), and the SVG writer
is a small hand-rolled emitter with no timestamps or generated ids.
"""

from __future__ import annotations

import math
import os

SCHEMA_VERSION = 1
JSON_DIGITS = 17
CSV_DIGITS = 12


def fmt_float(x: float, digits: int = JSON_DIGITS) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e15:
        return f"{x:.1f}"
    return f"{x:.{digits}g}"


def dumps_json(obj, digits: int = JSON_DIGITS) -> str:
    """Sorted-key JSON with fixed-precision floats.

    The stdlib encoder prints shortest-repr floats; reports promise a fixed
    significant-digit format instead, so the tree is walked directly.
    """
    out = []
    _emit(obj, out, digits)
    return "".join(out)


def _emit(obj, out, digits):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj, digits))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string JSON key: {key!r}")
            if i:
                out.append(", ")
            _emit(key, out, digits)
            out.append(": ")
            _emit(obj[key], out, digits)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _emit(item, out, digits)
        out.append("]")
    elif hasattr(obj, "item") and not hasattr(obj, "__len__"):
        _emit(obj.item(), out, digits)      # numpy scalars
    elif hasattr(obj, "tolist"):
        _emit(obj.tolist(), out, digits)    # numpy arrays
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def make_report(kind: str, data, config_hash: str, seed: int,
                budget=None) -> dict:
    rep = {"schema": SCHEMA_VERSION, "kind": kind,
           "config_hash": config_hash, "seed": seed, "data": data}
    if budget is not None:
        rep["budget"] = dict(budget)
    return rep


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))
        fh.write("\n")


def csv_text(header, rows, digits: int = CSV_DIGITS) -> str:
    def cell(v):
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, float):
            return fmt_float(v, digits)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(csv_text(header, rows))


# ------------------------------------------------------------------ SVG plots


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def svg_plot(path: str, curves=(), points=(), title: str = "",
             width: int = 640, height: int = 480, log_y: bool = False
             ) -> None:
    """Static plot: curves = [(label, xs, ys)], points = [(label, xs, ys)].

    Axes are linear (optionally log-y); ranges are fitted to the data.
    Deterministic output: no timestamps, no ids, fixed float formatting.
    """
    xs_all, ys_all = [], []
    series = list(curves) + list(points)
    for _, xs, ys in series:
        xs_all.extend(float(x) for x in xs)
        ys_all.extend(float(y) for y in ys)
    if log_y:
        ys_all = [math.log10(y) for y in ys_all if y > 0]
    if not xs_all:
        xs_all = ys_all = [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    m = 50     # margin
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]

    def fx(v):
        return _scale([v], x0, x1, m, width - m)[0]

    def fy(v):
        if log_y:
            v = math.log10(v) if v > 0 else y0
        return _scale([v], y0, y1, height - m, m)[0]

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width // 2}" y="20" text-anchor="middle" '
             f'font-family="sans-serif" font-size="14">{title}</text>',
             f'<rect x="{m}" y="{m}" width="{width - 2 * m}" '
             f'height="{height - 2 * m}" fill="none" stroke="#888"/>']
    for i, (label, xs, ys) in enumerate(curves):
        color = palette[i % len(palette)]
        pts = " ".join(f"{fx(float(x)):.2f},{fy(float(y)):.2f}"
                       for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{m + 5}" y="{m + 15 + 15 * i}" fill="{color}"'
                     f' font-family="sans-serif" font-size="12">'
                     f'{label}</text>')
    for j, (label, xs, ys) in enumerate(points):
        color = palette[(len(list(curves)) + j) % len(palette)]
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{fx(float(x)):.2f}" '
                         f'cy="{fy(float(y)):.2f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{m + 5}" '
                     f'y="{m + 15 + 15 * (len(list(curves)) + j)}" '
                     f'fill="{color}" font-family="sans-serif" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
