"""CSV tables and SVG plots for sweep results.

CSV layout: ``# key=value`` metadata lines, one header row, numeric rows
written with 17 significant digits so that re-reading is exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
from xml.sax.saxutils import escape

import numpy as np

from . import __version__


def _flatten(meta, prefix=""):
    for key, value in meta.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, f"{name}.")
        else:
            yield name, value


def _meta_value(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(value, default=repr)
    return str(value)


def format_number(x):
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return repr(x)
    return f"{x:.16e}"


def render_csv(result, extra_metadata=None):
    meta = {"code_version": __version__, "kind": result.kind}
    meta.update(result.metadata)
    meta.update(extra_metadata or {})
    buf = io.StringIO()
    for key, value in _flatten(meta):
        buf.write(f"# {key}={_meta_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in np.atleast_2d(result.rows):
        writer.writerow(format_number(v) for v in row)
    return buf.getvalue()


def emit_csv(result, path, extra_metadata=None):
    text = render_csv(result, extra_metadata)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """Return ``(metadata, columns, rows)`` from a file written by :func:`emit_csv`."""
    meta, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif line.strip():
                body.append(line)
    reader = csv.reader(body)
    columns = tuple(next(reader))
    rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return meta, columns, rows.reshape(-1, len(columns))


# --- SVG ------------------------------------------------------------------

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=80, right=150, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
# viridis anchor colours
_CMAP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]])


def _colour(u):
    u = min(max(float(u), 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(u), len(_CMAP) - 2)
    rgb = _CMAP[i] + (u - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in rgb)


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
            f'height="{HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
            f"{escape(title)}</text>",
        ]
        self.xlabel, self.ylabel = xlabel, ylabel

    def px(self, x):
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (1 - (y - self.y0) / (self.y1 - self.y0)) * self.ph

    def axes(self, xfmt="{:.3g}", yfmt="{:.4g}"):
        left, top = MARGIN["left"], MARGIN["top"]
        self.parts.append(f'<rect x="{left}" y="{top}" width="{self.pw}" height="{self.ph}" '
                          'fill="none" stroke="black"/>')
        for xv in _ticks(self.x0, self.x1):
            x = self.px(xv)
            self.parts.append(f'<line x1="{x:.1f}" y1="{top + self.ph}" x2="{x:.1f}" '
                              f'y2="{top + self.ph + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{x:.1f}" y="{top + self.ph + 18}" '
                              f'text-anchor="middle">{xfmt.format(xv)}</text>')
        for yv in _ticks(self.y0, self.y1):
            y = self.py(yv)
            self.parts.append(f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" '
                              'stroke="black"/>')
            self.parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">'
                              f"{yfmt.format(yv)}</text>")
        self.parts.append(f'<text x="{left + self.pw / 2:.1f}" y="{HEIGHT - 15}" '
                          f'text-anchor="middle" font-size="14">{escape(self.xlabel)}</text>')
        cy = top + self.ph / 2
        self.parts.append(f'<text x="20" y="{cy:.1f}" text-anchor="middle" font-size="14" '
                          f'transform="rotate(-90 20 {cy:.1f})">{escape(self.ylabel)}</text>')

    def finish(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot_svg(series, title, xlabel, ylabel):
    """``series`` is a list of ``(label, x, y)``; one polyline each."""
    xs = np.concatenate([np.asarray(x, float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, float) for _, _, y in series])
    pad = 0.05 * (ys.max() - ys.min() or 1e-3)
    cv = _Canvas((xs.min(), xs.max()), (ys.min() - pad, ys.max() + pad), title, xlabel, ylabel)
    cv.axes()
    for k, (label, x, y) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{cv.px(a):.2f},{cv.py(b):.2f}" for a, b in zip(x, y))
        cv.parts.append(f'<polyline class="series" fill="none" stroke="{colour}" '
                        f'stroke-width="2" points="{pts}"/>')
        ly = MARGIN["top"] + 20 * k + 10
        lx = WIDTH - MARGIN["right"] + 15
        cv.parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                        f'stroke="{colour}" stroke-width="2"/>')
        cv.parts.append(f'<text x="{lx + 25}" y="{ly + 4}">{escape(label)}</text>')
    return cv.finish()


def heatmap_svg(x, y, z, title, xlabel, ylabel, value_label="F"):
    """One ``<rect class="cell">`` per grid point; ``x``, ``y``, ``z`` are flat arrays."""
    x, y, z = (np.asarray(v, float) for v in (x, y, z))
    xs, ys = np.unique(x), np.unique(y)

    def half_steps(v):
        # half the gap to the nearer neighbour
        if len(v) == 1:
            return np.array([0.5])
        d = np.diff(v)
        return 0.5 * np.minimum(np.concatenate([d[:1], d]), np.concatenate([d, d[-1:]]))

    hx, hy = half_steps(xs), half_steps(ys)
    cv = _Canvas((xs[0] - hx[0], xs[-1] + hx[-1]), (ys[0] - hy[0], ys[-1] + hy[-1]),
                 title, xlabel, ylabel)
    zmin, zmax = float(z.min()), float(z.max())
    span = zmax - zmin or 1.0
    ix = {v: i for i, v in enumerate(xs)}
    iy = {v: i for i, v in enumerate(ys)}
    for xv, yv, zv in zip(x, y, z):
        i, j = ix[xv], iy[yv]
        left, right = cv.px(xv - hx[i]), cv.px(xv + hx[i])
        top, bottom = cv.py(yv + hy[j]), cv.py(yv - hy[j])
        cv.parts.append(
            f'<rect class="cell" x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" '
            f'height="{bottom - top:.2f}" fill="{_colour((zv - zmin) / span)}">'
            f"<title>{xlabel}={xv:.6g}, {ylabel}={yv:.6g}: {zv:.9f}</title></rect>"
        )
    cv.axes()
    # colour bar
    bx = WIDTH - MARGIN["right"] + 20
    for k in range(50):
        y0 = MARGIN["top"] + cv.ph * (1 - (k + 1) / 50)
        cv.parts.append(f'<rect x="{bx}" y="{y0:.2f}" width="18" height="{cv.ph / 50 + 0.5:.2f}" '
                        f'fill="{_colour((k + 0.5) / 50)}"/>')
    cv.parts.append(f'<text x="{bx + 24}" y="{MARGIN["top"] + 10}">{zmax:.5f}</text>')
    cv.parts.append(f'<text x="{bx + 24}" y="{MARGIN["top"] + cv.ph}">{zmin:.5f}</text>')
    cv.parts.append(f'<text x="{bx}" y="{MARGIN["top"] - 8}">{escape(value_label)}</text>')
    return cv.finish()


def scatter_svg(x, y, z, title, xlabel, ylabel):
    x, y, z = (np.asarray(v, float) for v in (x, y, z))
    cv = _Canvas((x.min(), x.max()), (y.min(), y.max()), title, xlabel, ylabel)
    zmin, span = float(z.min()), float(z.max() - z.min()) or 1.0
    for xv, yv, zv in zip(x, y, z):
        cv.parts.append(f'<circle class="cell" cx="{cv.px(xv):.2f}" cy="{cv.py(yv):.2f}" r="4" '
                        f'fill="{_colour((zv - zmin) / span)}"/>')
    cv.axes()
    return cv.finish()


def render_svg(result):
    kind = result.kind
    if kind == "detuning":
        series = []
        for kappa in dict.fromkeys(result.column("kappa_inv_us")):
            sel = result.column("kappa_inv_us") == kappa
            series.append((f"1/kappa = {kappa:g} us", result.column("D")[sel],
                           result.column("fidelity")[sel]))
        return line_plot_svg(series, "Transfer fidelity vs detuning ratio", "D", "F")
    if kind == "state_grid":
        args = (result.column("gamma"), result.column("theta"), result.column("fidelity"),
                "Transfer fidelity over input states", "γ", "θ")
        if result.metadata.get("sampling", "grid") == "random":
            return scatter_svg(*args)
        return heatmap_svg(*args)
    if kind == "coupling_inhomogeneity":
        return heatmap_svg(result.column("c"), result.column("d"), result.column("fidelity"),
                           "Transfer fidelity vs coupling inhomogeneity", "c", "d")
    if kind == "convergence":
        series = []
        for study, label in ((0, "truncation"), (1, "time step")):
            sel = result.column("study") == study
            if sel.any():
                x = np.arange(int(sel.sum()))
                series.append((label, x, result.column("fidelity")[sel]))
        return line_plot_svg(series, "Convergence (settings in study order)", "setting index",
                             "F")
    raise ValueError(f"no plot defined for result kind {kind!r}")


def emit_svg(result, path):
    text = render_svg(result)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path
