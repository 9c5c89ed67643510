"""Synthetic ad hoc network generation inside irregular regions.

A shape script lists signed shapes in the unit frame, one per line::

    + ellipse 0 0 1 1
    - rect 0.22 0.28 0.25 0.25
    - poly 3 0.72,0.30 0.85,0.52 0.59,0.52

``ellipse`` and ``rect`` take the top-left corner and a width and height;
``poly`` takes a vertex count followed by that many ``x,y`` pairs. A point
is open when it lies in some ``+`` shape and in no ``-`` shape (boundaries
count as inside).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import FormatError, InfeasibleParams, InvalidParams
from .fspl import fspl_rssi
from .graph import Topology, VisualDrawing
from .rng import _GOLDEN, SplitMix64, mix64

SHAPES = ("star", "u-shape", "smile", "donut")
SEGMENT_SAMPLES = 16
_ON_EDGE = 1e-12


@dataclass(frozen=True)
class Shape:
    sign: int
    kind: str
    params: tuple

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "rect":
            x0, y0, w, h = self.params
            return (x >= x0) & (x <= x0 + w) & (y >= y0) & (y <= y0 + h)
        if self.kind == "ellipse":
            x0, y0, w, h = self.params
            rx, ry = w / 2.0, h / 2.0
            u = (x - (x0 + rx)) / rx
            v = (y - (y0 + ry)) / ry
            return u * u + v * v <= 1.0
        return _in_polygon(np.asarray(self.params), x, y)


def _in_polygon(poly, x, y):
    """Even-odd rule; points on an edge count as inside."""
    inside = np.zeros(np.shape(x), dtype=bool)
    on_edge = np.zeros(np.shape(x), dtype=bool)
    k = len(poly)
    for a in range(k):
        x1, y1 = poly[a]
        x2, y2 = poly[(a + 1) % k]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
        # distance to the segment for the boundary rule
        dx, dy = x2 - x1, y2 - y1
        ll = dx * dx + dy * dy
        t = np.clip(((x - x1) * dx + (y - y1) * dy) / ll, 0.0, 1.0)
        px, py = x1 + t * dx - x, y1 + t * dy - y
        on_edge |= px * px + py * py <= _ON_EDGE**2
    return inside | on_edge


@dataclass(frozen=True)
class RegionMask:
    shapes: tuple

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        plus = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        minus = np.zeros_like(plus)
        for s in self.shapes:
            if s.sign > 0:
                plus |= s.contains(x, y)
            else:
                minus |= s.contains(x, y)
        return plus & ~minus

    def area(self, resolution=400) -> float:
        """Open area estimated on a regular grid of cell centres."""
        c = (np.arange(resolution) + 0.5) / resolution
        gx, gy = np.meshgrid(c, c)
        return float(self.contains(gx, gy).mean())

    def segment_inside(self, p, q, samples=SEGMENT_SAMPLES) -> bool:
        t = np.arange(1, samples + 1) / (samples + 1)
        x = p[0] + t * (q[0] - p[0])
        y = p[1] + t * (q[1] - p[1])
        return bool(self.contains(x, y).all())


def region_contains(mask: RegionMask, point) -> bool:
    return bool(mask.contains(point[0], point[1]))


def _floats(tokens, lineno):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise FormatError(f"bad number in {tokens!r}", lineno) from None
    if not all(0.0 <= v <= 1.0 for v in vals):
        raise FormatError("shape coordinates must lie in [0, 1]", lineno)
    return vals


def parse_shape_script(text: str) -> RegionMask:
    shapes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] not in ("+", "-"):
            raise FormatError("line must start with '+' or '-'", lineno)
        if len(toks) < 2:
            raise FormatError("missing shape kind", lineno)
        sign = 1 if toks[0] == "+" else -1
        kind, args = toks[1], toks[2:]
        if kind in ("ellipse", "rect"):
            if len(args) != 4:
                raise FormatError(f"{kind} takes 4 numbers, got {len(args)}", lineno)
            x, y, w, h = _floats(args, lineno)
            if w <= 0 or h <= 0:
                raise FormatError(f"{kind} needs positive width and height", lineno)
            shapes.append(Shape(sign, kind, (x, y, w, h)))
        elif kind == "poly":
            if not args:
                raise FormatError("poly needs a vertex count", lineno)
            try:
                k = int(args[0])
            except ValueError:
                raise FormatError(f"bad vertex count {args[0]!r}", lineno) from None
            if k < 3:
                raise FormatError("poly needs at least 3 vertices", lineno)
            pts = args[1:]
            if len(pts) != k:
                raise FormatError(f"poly declares {k} vertices but lists {len(pts)}", lineno)
            verts = []
            for p in pts:
                xy = p.split(",")
                if len(xy) != 2:
                    raise FormatError(f"vertex {p!r} is not an x,y pair", lineno)
                verts.append(tuple(_floats(xy, lineno)))
            shapes.append(Shape(sign, "poly", tuple(verts)))
        else:
            raise FormatError(f"unknown shape {kind!r}", lineno)
    if not any(s.sign > 0 for s in shapes):
        raise FormatError("a mask needs at least one '+' shape", None)
    return RegionMask(tuple(shapes))


def builtin_shape_text(name: str) -> str:
    if name not in SHAPES:
        raise KeyError(f"unknown builtin shape {name!r}; choose from {', '.join(SHAPES)}")
    return resources.files("cncah").joinpath("shapes").joinpath(f"{name}.shape").read_text("utf-8")


def load_mask(spec) -> RegionMask:
    """Builtin shape name, or a path to a shape script."""
    if spec in SHAPES:
        return parse_shape_script(builtin_shape_text(spec))
    path = Path(spec)
    if not path.exists() and path.stem in SHAPES:
        return parse_shape_script(builtin_shape_text(path.stem))
    return parse_shape_script(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class GenParams:
    """Generator knobs: node count, target average degree, minimum node
    spacing ``d``, edge radius ``gamma``, edge acceptance probability
    ``gamma_b`` and minimum edge length ``e`` (all lengths in the unit frame).
    """

    n: int
    delta: float
    d: float
    gamma: float
    gamma_b: float = 0.5
    e: float = 0.0
    seed: int = 0
    max_attempts: int = 10000

    def __post_init__(self):
        if self.n < 0:
            raise InvalidParams("n must be >= 0")
        if not 0 <= self.e < self.gamma:
            raise InvalidParams("need 0 <= e < gamma")
        if not 0 <= self.gamma_b <= 1:
            raise InvalidParams("gamma_b must be in [0, 1]")
        if self.d < 0:
            raise InvalidParams("d must be >= 0")
        if self.max_attempts < 1:
            raise InvalidParams("max_attempts must be >= 1")

    @classmethod
    def for_mask(cls, n, delta, mask: RegionMask, seed=0, **overrides) -> "GenParams":
        """Defaults scaled to the node density of ``mask``.

        The edge radius admits about ``2 * delta`` candidates per node, and
        nodes keep at least 0.3 of the mean spacing apart.
        """
        density = max(n, 1) / mask.area()
        values = dict(
            n=n,
            delta=delta,
            d=0.3 / math.sqrt(density),
            gamma=math.sqrt(2.0 * delta / (math.pi * density)),
            gamma_b=0.5,
            e=0.0,
            seed=seed,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _place_nodes(params: GenParams, mask: RegionMask, rng: SplitMix64) -> np.ndarray:
    pts = np.empty((params.n, 2))
    count = 0
    misses = 0
    d2 = params.d * params.d
    while count < params.n:
        x, y = rng.random(), rng.random()
        ok = bool(mask.contains(x, y))
        if ok and count and d2 > 0:
            dx = pts[:count, 0] - x
            dy = pts[:count, 1] - y
            ok = bool((dx * dx + dy * dy).min() >= d2)
        if ok:
            pts[count] = (x, y)
            count += 1
            misses = 0
        else:
            misses += 1
            if misses > params.max_attempts:
                raise InfeasibleParams(
                    f"placed {count} of {params.n} nodes; {params.max_attempts} "
                    "consecutive candidates rejected"
                )
    return pts


def _add_edges(params, mask, pts, rng):
    n = params.n
    edges = []
    present = set()
    if n < 2 or params.delta <= 0:
        if params.delta > 0 and n == 1:
            raise InfeasibleParams("a single node cannot reach a positive average degree")
        return edges, present
    target = params.delta * n / 2.0
    misses = 0
    while len(edges) < target:
        for v in range(n):
            u = rng.randbelow(n - 1)
            if u >= v:
                u += 1
            p = rng.random()
            key = (u, v) if u < v else (v, u)
            dist = math.hypot(pts[u, 0] - pts[v, 0], pts[u, 1] - pts[v, 1])
            if (
                p <= 1.0 - params.gamma_b
                or dist < params.e
                or dist > params.gamma
                or key in present
                or not mask.segment_inside(pts[v], pts[u])
            ):
                misses += 1
                if misses > params.max_attempts:
                    raise InfeasibleParams(
                        f"average degree stuck at {2 * len(edges) / n:.3f} < {params.delta}"
                    )
                continue
            misses = 0
            present.add(key)
            edges.append((v, u))
    return edges, present


def _repair(params, mask, pts, edges, present):
    """Join components with the shortest admissible links (Kruskal order)."""
    n = len(pts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    if comps <= 1:
        return edges
    pairs = np.array(sorted(cKDTree(pts).query_pairs(params.gamma)), dtype=np.intp).reshape(-1, 2)
    if len(pairs):
        lengths = np.hypot(*(pts[pairs[:, 0]] - pts[pairs[:, 1]]).T)
        keep = lengths >= params.e
        pairs, lengths = pairs[keep], lengths[keep]
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0], lengths))]
    for u, v in pairs.tolist():
        ru, rv = find(u), find(v)
        if ru == rv or (u, v) in present:
            continue
        if not mask.segment_inside(pts[u], pts[v]):
            continue
        parent[ru] = rv
        present.add((u, v))
        edges.append((u, v))
        comps -= 1
        if comps == 1:
            return edges
    raise InfeasibleParams(f"no admissible edge joins the remaining {comps} components")


def generate_topology(params: GenParams, mask: RegionMask) -> tuple[Topology, VisualDrawing]:
    """Rejection-sample nodes, then random edges until the average degree is met.

    The graph is made connected afterwards; the returned drawing holds the
    sampled (ground-truth) positions.
    """
    rng = SplitMix64(params.seed)
    pts = _place_nodes(params, mask, rng)
    edges, present = _add_edges(params, mask, pts, rng)
    if params.n > 1:
        edges = _repair(params, mask, pts, edges, present)
    return Topology(params.n, tuple(edges)), VisualDrawing(pts)


def generate_with_retries(params: GenParams, mask: RegionMask, retries: int = 20):
    """``generate_topology``, retried with derived seeds when a draw cannot be
    made connected (e.g. a lone node in a narrow spike). Returns
    ``(topology, drawing, params)`` where ``params.seed`` is the seed that
    succeeded, so ``generate_topology(params, mask)`` reproduces the output."""
    for attempt in range(retries + 1):
        trial = params if attempt == 0 else replace(params, seed=mix64(params.seed ^ (attempt * _GOLDEN)))
        try:
            topo, drawing = generate_topology(trial, mask)
        except InfeasibleParams:
            if attempt == retries:
                raise
            continue
        return topo, drawing, trial


def synthesize_rssi(drawing: VisualDrawing, topology: Topology, freq_mhz: float,
                    frame_scale: float, noise_sd: float = 0.0, seed: int = 0) -> Topology:
    """Attach free-space signal strengths computed from true edge lengths."""
    if not frame_scale > 0:
        raise InvalidParams("frame_scale must be positive")
    metres = frame_scale * drawing.edge_lengths(topology)
    rssi = fspl_rssi(metres, freq_mhz) if len(metres) else np.zeros(0)
    rssi = np.atleast_1d(np.asarray(rssi, dtype=float))
    if noise_sd > 0:
        rng = SplitMix64(seed)
        rssi = rssi + np.array([rng.gauss(0.0, noise_sd) for _ in range(len(rssi))])
    return Topology(topology.n, topology.edges, tuple(rssi.tolist()), float(freq_mhz), topology.frame)


def check_constraints(params: GenParams, mask: RegionMask, topology: Topology,
                      drawing: VisualDrawing) -> list[str]:
    """Violated generator invariants, as human-readable strings (empty if none)."""
    problems = []
    pos = drawing.positions
    if len(pos) and not mask.contains(pos[:, 0], pos[:, 1]).all():
        problems.append("node outside mask")
    if len(pos) > 1:
        nearest, _ = cKDTree(pos).query(pos, k=2)
        if nearest[:, 1].min() < params.d:
            problems.append("nodes closer than d")
    lengths = drawing.edge_lengths(topology)
    if len(lengths) and (lengths.min() < params.e or lengths.max() > params.gamma):
        problems.append("edge length outside [e, gamma]")
    for u, v in topology.edges:
        if not mask.segment_inside(pos[u], pos[v]):
            problems.append(f"edge ({u}, {v}) leaves the mask")
            break
    if topology.n and topology.average_degree < params.delta:
        problems.append("average degree below target")
    if not topology.is_connected():
        problems.append("graph disconnected")
    return problems


def generate_instance(shape, n, delta, seed, freq_mhz: Optional[float] = 2400.0,
                      frame_scale: float = 100.0, noise_sd: float = 0.0, retries: int = 20,
                      **overrides):
    """Convenience wrapper: mask + defaults + optional signal strengths."""
    mask = load_mask(shape) if not isinstance(shape, RegionMask) else shape
    params = GenParams.for_mask(n, delta, mask, seed=seed, **overrides)
    topo, drawing, params = generate_with_retries(params, mask, retries)
    if freq_mhz is not None and topo.m:
        topo = synthesize_rssi(drawing, topo, freq_mhz, frame_scale, noise_sd, seed=seed + 1)
    return topo, drawing, params, mask
