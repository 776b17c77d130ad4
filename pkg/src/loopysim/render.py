"""Deterministic SVG 1.1 renders of ring shapes and sweep maps."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .geometry import PolygonGeometry


@dataclass(frozen=True)
class ShapeStyle:
    size: int = 400
    margin: float = 0.08
    stroke: str = "#1f4e79"
    stroke_width: float = 2.0
    fill: str = "#dbe9f6"
    joint_radius: float = 2.5
    invalid_stroke: str = "#b00020"
    marker_radius: float = 5.0
    marker_color: str = "#e53935"
    title: str | None = None


def _fmt(v: float) -> str:
    # fixed precision keeps output byte-stable; avoid "-0.000"
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_shape(geometry: PolygonGeometry, style: ShapeStyle | None = None) -> str:
    """SVG of the chain as a closed path; crossings get circle markers."""
    style = style or ShapeStyle()
    pts = np.vstack((geometry.vertices, geometry.end_point[None, :]))
    if not np.isfinite(pts).all():
        raise ValueError("geometry has non-finite vertices")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    inner = style.size * (1.0 - 2.0 * style.margin)
    scale = inner / span
    centre = (lo + hi) / 2.0

    def to_px(p):
        x = style.size / 2.0 + (p[0] - centre[0]) * scale
        y = style.size / 2.0 - (p[1] - centre[1]) * scale  # SVG y points down
        return _fmt(x), _fmt(y)

    closed = geometry.is_closed(1e-9)
    invalid = geometry.self_intersects or not closed
    stroke = style.invalid_stroke if invalid else style.stroke
    coords = [to_px(p) for p in geometry.vertices]
    d = "M " + " L ".join(f"{x} {y}" for x, y in coords) + " Z"
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{style.size}" '
        f'height="{style.size}" viewBox="0 0 {style.size} {style.size}">',
    ]
    if style.title:
        lines.append(f"  <title>{escape(style.title)}</title>")
    lines.append(
        f'  <path id="body" d="{d}" fill="{style.fill}" stroke="{stroke}" '
        f'stroke-width="{_fmt(style.stroke_width)}" stroke-linejoin="round"/>'
    )
    if not closed:
        # the open chain's last segment, drawn to its true end point
        ex, ey = to_px(geometry.end_point)
        lx, ly = coords[-1]
        lines.append(
            f'  <line class="gap" x1="{lx}" y1="{ly}" x2="{ex}" y2="{ey}" '
            f'stroke="{stroke}" stroke-dasharray="4 3"/>'
        )
    lines.append('  <g id="joints">')
    for x, y in coords:
        lines.append(f'    <circle cx="{x}" cy="{y}" r="{_fmt(style.joint_radius)}" fill="{stroke}"/>')
    lines.append("  </g>")
    if geometry.crossings:
        lines.append('  <g id="crossings">')
        for i, j, p in geometry.crossings:
            x, y = to_px(p)
            lines.append(
                f'    <circle class="crossing" data-segments="{i} {j}" cx="{x}" cy="{y}" '
                f'r="{_fmt(style.marker_radius)}" fill="none" stroke="{style.marker_color}" stroke-width="2"/>'
            )
        lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def sweep_colors(points) -> np.ndarray:
    """RGB in [0, 1]: red = 2 lobes, green = 3, blue = 4+; invalid trials
    contribute black, i.e. nothing."""
    return np.array([[p.frac_2lobe, p.frac_3lobe, p.frac_4plus] for p in points])


def render_sweep_svg(result, cell: int = 32) -> str:
    (n1, v1), (n2, v2) = result.config.axis1, result.config.axis2
    w = len(v1) * cell
    h = len(v2) * cell
    pad = 60
    lines = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w + pad}" '
        f'height="{h + pad}" viewBox="0 0 {w + pad} {h + pad}">',
        f"  <title>lobe fractions over {escape(n1)} x {escape(n2)}</title>",
    ]
    for (i, j), p in sorted(result.points.items()):
        r, g, b = (int(round(255 * c)) for c in (p.frac_2lobe, p.frac_3lobe, p.frac_4plus))
        x = pad + i * cell
        y = (len(v2) - 1 - j) * cell
        lines.append(
            f'  <rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({r},{g},{b})">'
            f"<title>{escape(n1)}={v1[i]:g} {escape(n2)}={v2[j]:g}</title></rect>"
        )
    lines.append(
        f'  <text x="{pad + w / 2:g}" y="{h + 40}" text-anchor="middle" font-size="14">{escape(n1)}</text>'
    )
    lines.append(
        f'  <text x="20" y="{h / 2:g}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {h / 2:g})">{escape(n2)}</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
