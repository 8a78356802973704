# services/render_service.py
"""
SVG diagrams: the physical square of side 1 + m drawn in a fixed viewport,
solid disks shaded, rattlers left white, a black dot at every bond.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from services.contacts_service import RATTLER, ContactGraph
from services.geometry_service import Packing

logger = logging.getLogger(__name__)

PREAMBLE = """\
<?xml version="1.0" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"
"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg width="%(size)d" height="%(size)d" viewBox="0 0 %(size)d %(size)d" version="1.1" xmlns="http://www.w3.org/2000/svg">
<title>%(title)s</title>
<rect class="boundary" x="0" y="0" width="%(size)d" height="%(size)d" style="fill:#ffffff;stroke:#000000;stroke-width:2"/>
"""

POSTAMBLE = """\
</svg>
"""

SOLID_FILL = "#b0b0b0"
RATTLER_FILL = "#ffffff"


@dataclass(frozen=True)
class RenderOptions:
    labels: bool = True
    size: int = 1000


class SvgCanvas:
    """Collects drawing commands in the physical frame [0, 1 + m]^2"""

    def __init__(self, m: float, size: int):
        self.m = m
        self.size = size
        self.scale = size / (1.0 + m)
        self.commands: list[str] = []

    def to_view(self, x: float, y: float) -> tuple[float, float]:
        half = 0.5 * self.m
        return (x + half) * self.scale, self.size - (y + half) * self.scale

    def disk(self, x: float, y: float, fill: str, index: int) -> None:
        cx, cy = self.to_view(x, y)
        r = 0.5 * self.m * self.scale
        self.commands.append(
            '<circle class="disk" id="disk-%d" cx="%.4f" cy="%.4f" r="%.4f" '
            'style="fill:%s;stroke:#000000;stroke-width:1"/>' % (index, cx, cy, r, fill)
        )

    def dot(self, x: float, y: float) -> None:
        cx, cy = self.to_view(x, y)
        r = max(1.5, min(6.0, 0.08 * 0.5 * self.m * self.scale))
        self.commands.append(
            '<ellipse class="bond" cx="%.4f" cy="%.4f" rx="%.4f" ry="%.4f" style="fill:#000000"/>'
            % (cx, cy, r, r)
        )

    def label(self, x: float, y: float, text: str) -> None:
        cx, cy = self.to_view(x, y)
        font = max(6.0, 0.35 * self.m * self.scale)
        self.commands.append(
            '<text class="label" x="%.4f" y="%.4f" font-size="%.2f" text-anchor="middle" '
            'dominant-baseline="central">%s</text>' % (cx, cy, font, text)
        )

    def render(self, title: str) -> str:
        size = self.size
        return PREAMBLE % locals() + "\n".join(self.commands) + "\n" + POSTAMBLE


def _wall_point(x: float, y: float, wall: str, m: float) -> tuple[float, float]:
    half = 0.5 * m
    if wall == "left":
        return x - half, y
    if wall == "right":
        return x + half, y
    if wall == "bottom":
        return x, y - half
    return x, y + half


def render_svg(p: Packing, g: ContactGraph, options: RenderOptions | None = None) -> str:
    """
    Returns:
        SVG 1.1 text with n circles and one dot per bond
    """
    options = options or RenderOptions()
    canvas = SvgCanvas(p.m, options.size)
    centers = p.centers

    for i, (x, y) in enumerate(centers):
        fill = RATTLER_FILL if g.labels and g.labels[i] == RATTLER else SOLID_FILL
        canvas.disk(float(x), float(y), fill, i)
    for i, j, _ in g.disk_bonds:
        mid = 0.5 * (centers[i] + centers[j])
        canvas.dot(float(mid[0]), float(mid[1]))
    for i, wall, _ in g.wall_bonds:
        canvas.dot(*_wall_point(float(centers[i][0]), float(centers[i][1]), wall, p.m))
    if options.labels:
        for i, (x, y) in enumerate(centers):
            canvas.label(float(x), float(y), str(i + 1))

    title = f"n={p.n} m={p.m:.14g} {p.provenance.render()}".strip()
    logger.debug("rendered %s with %d bonds", title, g.bond_count)
    return canvas.render(title.replace("&", "and").replace("<", "").replace(">", ""))
