"""Pixel-space mapping of a series and deterministic SVG/PGM chart rendering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries


@dataclass(frozen=True)
class ChartDims:
    """Chart resolution in pixels. Minimum 4x4 (one window pair at m=2)."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 4 or self.height < 4:
            raise ValueError(f"dims must be at least 4x4, got {self.width}x{self.height}")

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


DEFAULT_DIMS = ChartDims(300, 200)


@dataclass(frozen=True)
class PixelSeries:
    """Per-column curve heights of a rasterized chart.

    ys holds one real-valued y (in pixel units, 0..height) per pixel column;
    values are kept unrounded so sub-pixel distances stay meaningful.
    """

    ys: np.ndarray
    dims: ChartDims

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=float).copy()
        if len(ys) != self.dims.width:
            raise ValueError(
                f"expected {self.dims.width} columns, got {len(ys)}"
            )
        if ys.min() < -1e-9 or ys.max() > self.dims.height + 1e-9:
            raise ValueError("pixel y values must lie in [0, height]")
        ys.flags.writeable = False
        object.__setattr__(self, "ys", ys)


def rasterize(series: TimeSeries, dims: ChartDims) -> PixelSeries:
    """Map a series onto pixel columns.

    The x-domain is mapped affinely onto columns 0..width-1 and the y-domain
    onto [0, height]; each column takes the linearly interpolated polyline
    value at its x position. A degenerate y-range yields a flat line at
    height/2.
    """
    col_x = np.linspace(series.xs[0], series.xs[-1], dims.width)
    vals = np.interp(col_x, series.xs, series.ys)
    lo = series.ys.min()
    hi = series.ys.max()
    if hi == lo:
        ys = np.full(dims.width, dims.height / 2.0)
    else:
        ys = (vals - lo) / (hi - lo) * dims.height
    return PixelSeries(ys, dims)


@dataclass(frozen=True)
class ChartStyle:
    line_color: str = "#000000"
    background: str = "#ffffff"
    stroke_width: int = 1


@dataclass(frozen=True)
class RenderedChart:
    """SVG (human viewing) and binary PGM (bit-exact) renderings of one chart."""

    svg: bytes
    pgm: bytes


def _hex_to_gray(color: str) -> int:
    color = color.lstrip("#")
    r, g, b = (int(color[k : k + 2], 16) for k in (0, 2, 4))
    return int(round((r + g + b) / 3))


def _svg(ps: PixelSeries, style: ChartStyle) -> bytes:
    w, h = ps.dims.width, ps.dims.height
    points = " ".join(f"{i},{h - y:.3f}" for i, y in enumerate(ps.ys))
    doc = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" version="1.1">\n'
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="{style.background}"/>\n'
        f'<polyline points="{points}" fill="none" stroke="{style.line_color}" '
        f'stroke-width="{style.stroke_width}"/>\n'
        "</svg>\n"
    )
    return doc.encode("utf-8")


def _draw_segment(canvas: np.ndarray, x0: int, y0: int, x1: int, y1: int, val: int):
    # Integer Bresenham, no anti-aliasing: output bytes must be exact.
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        canvas[y0, x0] = val
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _pgm(ps: PixelSeries, style: ChartStyle) -> bytes:
    w, h = ps.dims.width, ps.dims.height
    canvas = np.full((h, w), _hex_to_gray(style.background), dtype=np.uint8)
    line = _hex_to_gray(style.line_color)
    # Row 0 is the top of the image; ys measures height above the bottom edge.
    rows = h - 1 - np.clip(np.rint(ps.ys).astype(int), 0, h - 1)
    for i in range(w - 1):
        _draw_segment(canvas, i, rows[i], i + 1, rows[i + 1], line)
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + canvas.tobytes()


def render_chart(ps: PixelSeries, style: ChartStyle = ChartStyle()) -> RenderedChart:
    """Render a pixel series as an SVG polyline plus a binary (P5) PGM raster.

    Both outputs are byte-deterministic for identical inputs.
    """
    return RenderedChart(svg=_svg(ps, style), pgm=_pgm(ps, style))


def mask_series(dims: ChartDims, seed: int) -> PixelSeries:
    """A chart-like but information-free pixel series with high entropy."""
    rng = np.random.default_rng([0x6D61736B, seed])
    return PixelSeries(rng.uniform(0.0, dims.height, dims.width), dims)


def render_mask(dims: ChartDims, seed: int, style: ChartStyle = ChartStyle()) -> RenderedChart:
    """Render a deterministic pseudo-random mask image for the given seed."""
    return render_chart(mask_series(dims, seed), style)
