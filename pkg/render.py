"""
render.py - SVG drawings of Manhattan networks and fractal cities (drawsvg)
"""

import logging
from typing import Optional, Sequence, Union

import drawsvg as draw
import numpy as np

from city import CityPoint, FractalCity
from config import DEFAULT_WIDTH_PX
from errors import HyperfractalError
from exporters import atomic_write_text
from manhattan import ManhattanNetwork
from styles import (
    BASE_STROKE_PX, BOUNDARY_STROKE_PX, CELL_STROKE_PX, CENTER_RADIUS_PX,
    MIN_STROKE_PX, PAPER_THEME, POINT_RADIUS_PX, PX_DECIMALS, Theme,
)

logger = logging.getLogger(__name__)


def stroke_width(depth: int, w0: float = BASE_STROKE_PX) -> float:
    """w0 * 2^-depth, never thinner than MIN_STROKE_PX."""
    return max(w0 * 2.0 ** -depth, MIN_STROKE_PX)


class _Canvas:
    """Unit square -> pixel frame with the y axis flipped (origin bottom-left)."""

    def __init__(self, width_px: int, theme: Theme):
        if width_px <= 0:
            raise HyperfractalError(f"width_px must be > 0, got {width_px}")
        self.size = float(width_px)
        self.theme = theme
        self.drawing = draw.Drawing(width_px, width_px)
        self.drawing.append(draw.Rectangle(0, 0, width_px, width_px, fill=theme.background,
                                           stroke=theme.frame, stroke_width=1))

    def px(self, x: float, y: float):
        return round(x * self.size, PX_DECIMALS), round((1.0 - y) * self.size, PX_DECIMALS)

    def line(self, x0, y0, x1, y1, color: str, width: float) -> None:
        a, b = self.px(x0, y0)
        c, d = self.px(x1, y1)
        self.drawing.append(draw.Line(a, b, c, d, stroke=color, stroke_width=round(width, PX_DECIMALS),
                                      stroke_linecap='butt'))

    def dot(self, x: float, y: float, color: str, radius: float) -> None:
        cx, cy = self.px(x, y)
        self.drawing.append(draw.Circle(cx, cy, radius, fill=color))

    def polygon(self, coords, color: str, width: float) -> None:
        flat = [v for x, y in coords for v in self.px(x, y)]
        self.drawing.append(draw.Lines(*flat, close=True, fill='none', stroke=color, stroke_width=width))


def _point_coords(points) -> np.ndarray:
    if points is None:
        return np.empty((0, 2))
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 2).astype(float)
    rows = []
    for p in points:
        if isinstance(p, CityPoint):
            rows.append(p.location.as_tuple())
        elif hasattr(p, 'x'):
            rows.append((p.x, p.y))
        else:
            rows.append(tuple(p))
    return np.array(rows, dtype=float).reshape(-1, 2)


def _draw_network(canvas: _Canvas, network: ManhattanNetwork, w0: float,
                  max_draw_depth: Optional[int]) -> None:
    x0, y0, x1, y1 = network.endpoints()
    depths = network.depths
    top = network.max_depth if max_draw_depth is None else min(max_draw_depth, network.max_depth)
    # deepest first so the main axes end up on top
    for k in range(top, -1, -1):
        width = stroke_width(k, w0)
        for i in np.flatnonzero(depths == k):
            canvas.line(x0[i], y0[i], x1[i], y1[i], canvas.theme.street, width)


def _draw_city(canvas: _Canvas, city: FractalCity, w0: float, max_draw_depth: Optional[int]) -> None:
    theme = canvas.theme
    for cell in city.diagram.cells:
        canvas.polygon([v.as_tuple() for v in cell.polygon.vertices], theme.cell_outline, CELL_STROKE_PX)
    for district in city.districts:
        color = theme.district_color(district.index)
        top = int(district.depths.max())
        if max_draw_depth is not None:
            top = min(top, max_draw_depth)
        for k in range(top, -1, -1):
            width = stroke_width(k, w0)
            for i in np.flatnonzero(district.depths == k):
                (a, b), (c, d) = district.starts[i], district.ends[i]
                canvas.line(a, b, c, d, color, width)
    for edge in city.boundary.edges:
        seg = edge.segment
        canvas.line(seg.start.x, seg.start.y, seg.end.x, seg.end.y, theme.boundary, BOUNDARY_STROKE_PX)
    for center in city.diagram.centers:
        canvas.dot(center.x, center.y, theme.center, CENTER_RADIUS_PX)


def render_svg(obj: Union[ManhattanNetwork, FractalCity], points: Optional[Sequence] = None,
               path: Optional[str] = None, width_px: int = DEFAULT_WIDTH_PX,
               theme: Theme = PAPER_THEME, w0: float = BASE_STROKE_PX,
               max_draw_depth: Optional[int] = None) -> str:
    """
    Draw a network or city, optionally overlaid with sampled points.

    Stroke width falls off as w0 * 2^-depth; `max_draw_depth` hides deeper
    segments (the measure is untouched). Returns the SVG text and writes it
    to `path` when given.
    """
    canvas = _Canvas(width_px, theme)
    if isinstance(obj, ManhattanNetwork):
        _draw_network(canvas, obj, w0, max_draw_depth)
    elif isinstance(obj, FractalCity):
        _draw_city(canvas, obj, w0, max_draw_depth)
    else:
        raise HyperfractalError(f"cannot render {type(obj).__name__}")

    coords = _point_coords(points)
    for x, y in coords.tolist():
        canvas.dot(x, y, theme.point, POINT_RADIUS_PX)

    svg = canvas.drawing.as_svg()
    if path:
        atomic_write_text(path, svg)
        logger.info("Wrote SVG (%d px, %d points) to %s", width_px, len(coords), path)
    return svg
