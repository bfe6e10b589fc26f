"""Minimal hand-written SVG plots (line/step and scatter) with no plotting deps."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 50


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    kind: str = "line"  # line | step | scatter
    dashed: bool = False
    color: str = "#1f77b4"


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    vlines: list = field(default_factory=list)

    def add(self, *args, **kwargs) -> "Plot":
        self.series.append(Series(np.asarray(args[0], float), np.asarray(args[1], float), *args[2:], **kwargs))
        return self

    def _bounds(self):
        xs = [s.x[np.isfinite(s.x)] for s in self.series if len(s.x)]
        ys = [s.y[np.isfinite(s.y)] for s in self.series if len(s.y)]
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
        y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

        def sx(v):
            return MARGIN + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for frac in np.linspace(0.0, 1.0, 5):
            xv = x0 + frac * (x1 - x0)
            yv = y0 + frac * (y1 - y0)
            out.append(f'<text x="{sx(xv):.1f}" y="{HEIGHT - MARGIN + 14}" text-anchor="middle">{xv:.4g}</text>')
            out.append(f'<text x="{MARGIN - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
        out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="14" y="{HEIGHT / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {HEIGHT / 2:.1f})">{escape(self.ylabel)}</text>'
        )
        for v in self.vlines:
            if x0 <= v <= x1:
                out.append(
                    f'<line x1="{sx(v):.1f}" y1="{MARGIN}" x2="{sx(v):.1f}" y2="{HEIGHT - MARGIN}" stroke="#bbbbbb" stroke-width="0.5"/>'
                )
        for k, s in enumerate(self.series):
            ok = np.isfinite(s.x) & np.isfinite(s.y)
            xs, ys = s.x[ok], s.y[ok]
            dash = ' stroke-dasharray="4,3"' if s.dashed else ""
            if s.kind == "scatter":
                out.extend(
                    f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="1" fill="{s.color}"/>' for a, b in zip(xs, ys)
                )
            elif len(xs):
                if s.kind == "step":
                    px, py = [xs[0]], [ys[0]]
                    for a, b in zip(xs[1:], ys[1:]):
                        px += [a, a]
                        py += [py[-1], b]
                    xs, ys = np.array(px), np.array(py)
                pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(xs, ys))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"{dash}/>')
            ly = MARGIN + 14 + 14 * k
            out.append(
                f'<line x1="{WIDTH - MARGIN - 110}" y1="{ly - 4}" x2="{WIDTH - MARGIN - 90}" y2="{ly - 4}" stroke="{s.color}"{dash}/>'
            )
            out.append(f'<text x="{WIDTH - MARGIN - 86}" y="{ly}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
