"""Tiny SVG writer for phase portraits on the unit square."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape


@dataclass
class Polyline:
    xs: list
    ys: list
    stroke: str = "#4a6fa5"
    width: float = 1.0
    label: str | None = None
    dashed: bool = False


@dataclass
class Figure:
    title: str = ""
    size: int = 520
    margin: int = 50
    lines: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, line: Polyline) -> None:
        self.lines.append(line)

    def _px(self, x: float, y: float) -> tuple[float, float]:
        span = self.size - 2 * self.margin
        return self.margin + x * span, self.size - self.margin - y * span

    def render(self, timestamp: str | None = None) -> str:
        s = self.size
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
        ]
        if timestamp:
            out.append(f"<!-- generated {escape(timestamp)} -->")
        out.append(f'<rect x="0" y="0" width="{s}" height="{s}" fill="white"/>')
        x0, y0 = self._px(0, 0)
        x1, y1 = self._px(1, 1)
        out.append(
            f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
            'fill="none" stroke="black" stroke-width="1"/>'
        )
        for k in range(5):
            v = k / 4
            tx, ty = self._px(v, 0)
            out.append(f'<line x1="{tx:.2f}" y1="{ty:.2f}" x2="{tx:.2f}" y2="{ty + 5:.2f}" stroke="black"/>')
            out.append(f'<text x="{tx:.2f}" y="{ty + 18:.2f}" font-size="11" text-anchor="middle">{v:g}</text>')
            lx, ly = self._px(0, v)
            out.append(f'<line x1="{lx - 5:.2f}" y1="{ly:.2f}" x2="{lx:.2f}" y2="{ly:.2f}" stroke="black"/>')
            out.append(f'<text x="{lx - 8:.2f}" y="{ly + 4:.2f}" font-size="11" text-anchor="end">{v:g}</text>')
        bx, by = self._px(0.5, 0)
        out.append(f'<text x="{bx:.2f}" y="{by + 36:.2f}" font-size="13" text-anchor="middle">x</text>')
        lx, ly = self._px(0, 0.5)
        out.append(f'<text x="{lx - 34:.2f}" y="{ly:.2f}" font-size="13" text-anchor="middle">y</text>')
        if self.title:
            out.append(f'<text x="{s / 2:.2f}" y="22" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        for ln in self.lines:
            if len(ln.xs) < 2:
                continue
            pts = " ".join(
                "{:.2f},{:.2f}".format(*self._px(min(max(a, -0.05), 1.05), min(max(b, -0.05), 1.05)))
                for a, b in zip(ln.xs, ln.ys)
            )
            dash = ' stroke-dasharray="5,4"' if ln.dashed else ""
            title = f"<title>{escape(ln.label)}</title>" if ln.label else ""
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{ln.stroke}" '
                f'stroke-width="{ln.width:g}"{dash}>{title}</polyline>'
            )
        for i, note in enumerate(self.notes):
            out.append(f'<text x="{self.margin}" y="{s - 8 - 14 * (len(self.notes) - 1 - i):.0f}" '
                       f'font-size="10" fill="#a00">{escape(note)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
