"""Artifact writers: atomic files, fixed-precision JSON, and small SVG line plots."""
from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np


def atomic_write(path, text):
    """Write ``text`` to a temporary sibling and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(obj):
    """Convert to JSON-ready values with floats kept as Python floats."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def to_json(obj, indent=2):
    """Deterministic JSON with sorted keys and floats printed to 17 significant digits."""
    return _encode(_plain(obj), indent, 0) + "\n"


def line_plot_svg(x, y, xlabel, ylabel, title="", width=480, height=320):
    """A polyline with two axes and min/max tick labels."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    left, right, top, bottom = 64, 16, 28, 44
    pw, ph = width - left - right, height - top - bottom
    if x.size == 0:
        x, y = np.array([0.0, 1.0]), np.array([0.0, 0.0])
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    px = left + (x - x0) / (x1 - x0) * pw
    py = top + ph - (y - y0) / (y1 - y0) * ph
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
    g = lambda v: format(v, ".6g")  # noqa: E731
    base_y, base_x = top + ph, left
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{base_x}" y1="{base_y}" x2="{left + pw}" y2="{base_y}" stroke="black"/>',
        f'<line x1="{base_x}" y1="{top}" x2="{base_x}" y2="{base_y}" stroke="black"/>',
        f'<text x="{base_x}" y="{base_y + 16}" font-size="11">{g(x0)}</text>',
        f'<text x="{left + pw}" y="{base_y + 16}" font-size="11" text-anchor="end">{g(x1)}</text>',
        f'<text x="{base_x - 4}" y="{base_y}" font-size="11" text-anchor="end">{g(y0)}</text>',
        f'<text x="{base_x - 4}" y="{top + 10}" font-size="11" text-anchor="end">{g(y1)}</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="14" y="{top + ph / 2:.1f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{ylabel}</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>',
        "</svg>",
        "",
    ])
