"""Static SVG phase portraits for two- and three-strategy games.

Output is plain text with fixed number formatting and no timestamps, so the
same inputs always give byte-identical documents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .analysis import find_rest_points
from .dynamics import FieldKind, field_function
from .flow import StepUnderflowError, integrate
from .game import PayoffMatrix

CLASS_COLORS = {
    "attractor": "#1a7f37",
    "repeller": "#cf222e",
    "saddle": "#9a6700",
    "center_candidate": "#0969da",
    "nonhyperbolic": "#6e7781",
    "rest_set_sample": "#8250df",
}


@dataclass(frozen=True)
class PhaseOptions:
    horizon: float = 30.0
    samples: int = 600
    size: float = 480.0
    margin: float = 40.0
    arrow_spacing: float = 60.0
    arrow_size: float = 6.0
    label_rest_points: bool = True


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Doc:
    def __init__(self, width: float, height: float):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(self.width)}" height="{_f(self.height)}" '
            f'viewBox="0 0 {_f(self.width)} {_f(self.height)}">\n'
            f'<rect x="0" y="0" width="{_f(self.width)}" height="{_f(self.height)}" fill="white"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _arrowheads(pts: np.ndarray, spacing: float, size: float) -> list[str]:
    """Triangles every ``spacing`` units of arc length, pointing along the path."""
    out = []
    if len(pts) < 2:
        return out
    seg = np.diff(pts, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    target = spacing / 2
    while target < cum[-1]:
        i = int(np.searchsorted(cum, target, side="right")) - 1
        i = min(i, len(seg) - 1)
        if lens[i] == 0:
            target += spacing
            continue
        u = seg[i] / lens[i]
        p = pts[i] + u * (target - cum[i])
        nrm = np.array([-u[1], u[0]])
        tip = p + u * size
        a = p - u * size * 0.6 + nrm * size * 0.6
        b = p - u * size * 0.6 - nrm * size * 0.6
        out.append(
            f'<polygon class="arrow" points="{_f(tip[0])},{_f(tip[1])} {_f(a[0])},{_f(a[1])} '
            f'{_f(b[0])},{_f(b[1])}" fill="black"/>'
        )
        target += spacing
    return out


def _rest_marker(doc: _Doc, px: float, py: float, cls: str, label: bool) -> None:
    color = CLASS_COLORS.get(cls, "#000000")
    doc.add(f'<circle class="rest-point" data-class="{cls}" cx="{_f(px)}" cy="{_f(py)}" r="4.50" '
            f'fill="{color}" stroke="black" stroke-width="0.80"/>')
    if label:
        doc.add(f'<text x="{_f(px + 6)}" y="{_f(py - 6)}" font-size="10" font-family="sans-serif" '
                f'fill="{color}">{escape(cls)}</text>')


def _trajectory(game, kind, x0, opts: PhaseOptions) -> np.ndarray:
    try:
        return integrate(game, kind, x0, opts.horizon, samples=opts.samples).states
    except StepUnderflowError as exc:
        return exc.partial.states


def _ternary(opts: PhaseOptions):
    side = opts.size - 2 * opts.margin
    h = side * math.sqrt(3) / 2
    v = np.array([
        [opts.margin, opts.margin + h],
        [opts.margin + side, opts.margin + h],
        [opts.margin + side / 2, opts.margin],
    ])
    return v, opts.margin * 2 + h


def _phase_ternary(game, kind, starts, opts: PhaseOptions) -> str:
    verts, height = _ternary(opts)
    doc = _Doc(opts.size, height)
    tri = " ".join(f"{_f(x)},{_f(y)}" for x, y in verts)
    doc.add(f'<polygon class="simplex" points="{tri}" fill="none" stroke="black" stroke-width="1.20"/>')
    offsets = [(-14, 14), (6, 14), (-4, -8)]
    for i, ((x, y), (dx, dy)) in enumerate(zip(verts, offsets)):
        doc.add(f'<text x="{_f(x + dx)}" y="{_f(y + dy)}" font-size="12" font-family="sans-serif">{i + 1}</text>')
    for x0 in starts:
        pts = _trajectory(game, kind, x0, opts) @ verts
        path = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        doc.add(f'<polyline class="trajectory" points="{path}" fill="none" stroke="#24292f" stroke-width="1.00"/>')
        for a in _arrowheads(pts, opts.arrow_spacing, opts.arrow_size):
            doc.add(a)
    for rp in find_rest_points(game, kind):
        px, py = np.asarray(rp.location) @ verts
        _rest_marker(doc, px, py, rp.simplex_stability, opts.label_rest_points)
    return doc.render()


def _phase_line(game, kind, starts, opts: PhaseOptions) -> str:
    width = opts.size
    y = 60.0
    doc = _Doc(width, 120.0)
    x_left, x_right = opts.margin, width - opts.margin

    def px(s):  # s = share of strategy 1; strategy-1 vertex on the right
        return x_left + s * (x_right - x_left)

    doc.add(f'<line class="phase-line" x1="{_f(x_left)}" y1="{_f(y)}" x2="{_f(x_right)}" y2="{_f(y)}" '
            f'stroke="black" stroke-width="1.20"/>')
    doc.add(f'<text x="{_f(x_left - 4)}" y="{_f(y + 22)}" font-size="11" font-family="sans-serif">x1=0</text>')
    doc.add(f'<text x="{_f(x_right - 16)}" y="{_f(y + 22)}" font-size="11" font-family="sans-serif">x1=1</text>')
    rests = find_rest_points(game, kind)
    shares = sorted({round(float(rp.location[0]), 12) for rp in rests})
    f = field_function(game, kind)
    for lo, hi in zip(shares, shares[1:]):
        mid = (lo + hi) / 2
        v = f(np.array([mid, 1 - mid]))[0]
        if v == 0:
            continue
        u = np.array([1.0 if v > 0 else -1.0, 0.0])
        p = np.array([px(mid), y])
        s = opts.arrow_size
        tip, a, b = p + u * s, p - u * s * 0.6 + [0, s * 0.6], p - u * s * 0.6 - [0, s * 0.6]
        doc.add(f'<polygon class="arrow" points="{_f(tip[0])},{_f(tip[1])} {_f(a[0])},{_f(a[1])} '
                f'{_f(b[0])},{_f(b[1])}" fill="black"/>')
    for x0 in starts:
        s0 = float(np.asarray(x0, dtype=float)[0])
        doc.add(f'<circle class="start" cx="{_f(px(s0))}" cy="{_f(y)}" r="2.50" fill="#57606a"/>')
    for rp in rests:
        _rest_marker(doc, px(float(rp.location[0])), y, rp.simplex_stability, opts.label_rest_points)
    return doc.render()


def emit_phase_svg(A, kind=FieldKind.IBR, starts=(), options: PhaseOptions | None = None) -> str:
    """Render a phase portrait: a ternary plot for three strategies, a phase line for two.

    Trajectories from each start are drawn with arrowheads at fixed arc-length
    intervals; rest points are colored and labeled by stability class.
    """
    game = A if isinstance(A, PayoffMatrix) else PayoffMatrix(A)
    kind = FieldKind.parse(kind)
    opts = options or PhaseOptions()
    if game.n == 3:
        return _phase_ternary(game, kind, [np.asarray(s, dtype=float) for s in starts], opts)
    if game.n == 2:
        return _phase_line(game, kind, [np.asarray(s, dtype=float) for s in starts], opts)
    raise ValueError(f"phase portraits support 2 or 3 strategies, got {game.n}")
