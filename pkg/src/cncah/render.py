"""SVG snapshots of a drawing."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

from .graph import Topology, VisualDrawing, fit_to_frame

NODE_FILL = "#4a6fa5"
HIGHLIGHT_FILL = "#d1495b"
EDGE_STROKE = "#9aa5b1"


@dataclass(frozen=True)
class RenderOptions:
    width: float = 1920
    height: float = 1080
    node_radius: float = 4.0
    highlight: frozenset = frozenset()
    show_edges: bool = True
    title: str = ""

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("width and height must be positive")
        object.__setattr__(self, "highlight", frozenset(int(v) for v in self.highlight))


def _num(x) -> str:
    return format(float(x), ".6g")


def render_svg(drawing: VisualDrawing, topology: Topology,
               opts: RenderOptions = RenderOptions()) -> str:
    """One ``line`` per edge, then one ``circle`` per node (highlighted nodes
    in a second colour)."""
    if len(drawing) != topology.n:
        raise ValueError("drawing does not match topology")
    px = fit_to_frame(drawing, opts.width, opts.height)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(opts.width)}" '
        f'height="{_num(opts.height)}" viewBox="0 0 {_num(opts.width)} {_num(opts.height)}">',
    ]
    if opts.title:
        out.append(f"<title>{opts.title.replace('&', '&amp;').replace('<', '&lt;')}</title>")
    out.append('<rect width="100%" height="100%" fill="white"/>')
    if opts.show_edges and topology.m:
        out.append(f'<g stroke={quoteattr(EDGE_STROKE)} stroke-width="1">')
        for u, v in topology.edges:
            out.append(f'<line x1="{_num(px[u, 0])}" y1="{_num(px[u, 1])}" '
                       f'x2="{_num(px[v, 0])}" y2="{_num(px[v, 1])}"/>')
        out.append("</g>")
    r = _num(opts.node_radius)
    for i in range(topology.n):
        fill = HIGHLIGHT_FILL if i in opts.highlight else NODE_FILL
        out.append(f'<circle id="n{i}" cx="{_num(px[i, 0])}" cy="{_num(px[i, 1])}" r="{r}" '
                   f'fill="{fill}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
