"""Graph and drawing value types, hop counts, and the on-disk graph format.

File format (UTF-8, whitespace separated, ``#`` starts a comment)::

    cncah-graph v1
    nodes <n>
    edges <m>
    frame <L0>
    freq <MHz or ->
    node <id> <x|-> <y|->        (n lines)
    edge <u> <v> <rssi_dBm|->    (m lines)

Node ids in a file may be arbitrary integers; they are remapped to the dense
range ``0..n-1`` in file order when parsed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DegenerateGraph, DisconnectedGraph, FormatError

MAGIC = "cncah-graph v1"


@dataclass(frozen=True)
class Topology:
    """Pure connectivity: what a layout algorithm is allowed to see.

    ``rssi`` is aligned with ``edges``; an entry may be ``None`` when the
    signal strength of that link is unknown.
    """

    n: int
    edges: tuple = ()
    rssi: Optional[tuple] = None
    freq_mhz: Optional[float] = None
    frame: float = 1.0

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        seen = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)
        if self.rssi is not None:
            rssi = tuple(None if s is None else float(s) for s in self.rssi)
            if len(rssi) != len(edges):
                raise ValueError("rssi must align with edges")
            object.__setattr__(self, "rssi", rssi if any(s is not None for s in rssi) else None)
        if not self.frame > 0:
            raise ValueError("frame length must be positive")

    @property
    def node_ids(self):
        return range(self.n)

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.intp)
        return np.array(self.edges, dtype=np.intp)

    @cached_property
    def neighbors(self) -> tuple:
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.intp)
        if self.edges:
            np.add.at(deg, self.edge_array.ravel(), 1)
        return deg

    @property
    def average_degree(self) -> float:
        return 2.0 * self.m / self.n if self.n else 0.0

    @cached_property
    def adjacency(self) -> csr_matrix:
        e = self.edge_array
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def components(self):
        """Component label per node."""
        if self.n == 0:
            return np.zeros(0, dtype=np.intp)
        _, labels = connected_components(self.adjacency, directed=False)
        return labels

    def is_connected(self) -> bool:
        return self.n <= 1 or len(set(self.components().tolist())) == 1

    def has_rssi(self) -> bool:
        return (
            self.freq_mhz is not None
            and self.rssi is not None
            and all(s is not None for s in self.rssi)
        )

    def without_rssi(self) -> "Topology":
        return Topology(self.n, self.edges, None, None, self.frame)

    def with_edges(self, extra) -> "Topology":
        """Copy with extra edges appended (signal strength unknown)."""
        extra = tuple(extra)
        rssi = None if self.rssi is None else self.rssi + (None,) * len(extra)
        return Topology(self.n, self.edges + extra, rssi, self.freq_mhz, self.frame)

    def subgraph(self, nodes) -> tuple["Topology", np.ndarray]:
        """Induced subgraph on ``nodes``; returns it with the old-id lookup."""
        nodes = np.array(sorted(set(int(v) for v in nodes)), dtype=np.intp)
        index = {int(v): i for i, v in enumerate(nodes)}
        edges, rssi = [], []
        for k, (u, v) in enumerate(self.edges):
            if u in index and v in index:
                edges.append((index[u], index[v]))
                rssi.append(None if self.rssi is None else self.rssi[k])
        sub = Topology(
            len(nodes),
            tuple(edges),
            tuple(rssi) if self.rssi is not None else None,
            self.freq_mhz,
            self.frame,
        )
        return sub, nodes


@dataclass(eq=False)
class VisualDrawing:
    """Node positions in the unit windowed frame, one row per node."""

    positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        self.positions = pos

    def __len__(self):
        return len(self.positions)

    def copy_positions(self) -> np.ndarray:
        return np.array(self.positions)

    def edge_lengths(self, topology: Topology) -> np.ndarray:
        e = topology.edge_array
        if len(e) == 0:
            return np.zeros(0)
        d = self.positions[e[:, 0]] - self.positions[e[:, 1]]
        return np.hypot(d[:, 0], d[:, 1])

    def same_as(self, other: "VisualDrawing") -> bool:
        return self.positions.shape == other.positions.shape and bool(
            np.array_equal(self.positions, other.positions)
        )


def hop_matrix(topology: Topology) -> np.ndarray:
    """All-pairs shortest hop counts (BFS)."""
    if topology.n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    d = shortest_path(topology.adjacency, method="D", directed=False, unweighted=True)
    if not np.all(np.isfinite(d)):
        raise DisconnectedGraph("graph is disconnected; hop counts are unbounded")
    return d.astype(np.int64)


def require_nodes(topology: Topology, at_least=2):
    if topology.n < at_least:
        raise DegenerateGraph(f"need at least {at_least} nodes, got {topology.n}")


def fit_to_frame(drawing: VisualDrawing, width, height) -> np.ndarray:
    """Scale unit-frame coordinates to a ``width`` x ``height`` pixel canvas."""
    if not (width > 0 and height > 0):
        raise ValueError("width and height must be positive")
    return drawing.positions * np.array([float(width), float(height)])


# --- file format ---------------------------------------------------------

def _fmt(x) -> str:
    return "-" if x is None else repr(float(x))


def serialize_graph(topology: Topology, drawing: Optional[VisualDrawing] = None) -> str:
    if drawing is not None and len(drawing) != topology.n:
        raise ValueError("drawing size does not match topology")
    lines = [
        MAGIC,
        f"nodes {topology.n}",
        f"edges {topology.m}",
        f"frame {_fmt(topology.frame)}",
        f"freq {_fmt(topology.freq_mhz)}",
    ]
    for i in range(topology.n):
        if drawing is None:
            lines.append(f"node {i} - -")
        else:
            x, y = drawing.positions[i]
            lines.append(f"node {i} {_fmt(x)} {_fmt(y)}")
    rssi = topology.rssi
    for k, (u, v) in enumerate(topology.edges):
        s = None if rssi is None else rssi[k]
        lines.append(f"edge {u} {v} {_fmt(s)}")
    return "\n".join(lines) + "\n"


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _num(tok, lineno, what, allow_dash=False):
    if allow_dash and tok == "-":
        return None
    try:
        val = float(tok)
    except ValueError:
        raise FormatError(f"bad {what} {tok!r}", lineno) from None
    if not np.isfinite(val):
        raise FormatError(f"non-finite {what}", lineno)
    return val


def _int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"bad {what} {tok!r}", lineno) from None


def parse_graph(text: str) -> tuple[Topology, Optional[VisualDrawing]]:
    lines = list(_content_lines(text))
    if not lines:
        raise FormatError("empty graph file", 1)

    def header(idx, key, nargs):
        if idx >= len(lines):
            raise FormatError(f"missing '{key}' header", lines[-1][0])
        lineno, toks = lines[idx]
        if toks[0] != key or len(toks) != nargs + 1:
            raise FormatError(f"expected '{key}' header", lineno)
        return lineno, toks[1:]

    lineno, toks = lines[0]
    if " ".join(toks) != MAGIC:
        raise FormatError(f"expected '{MAGIC}'", lineno)
    ln, (tok,) = header(1, "nodes", 1)
    n = _int(tok, ln, "node count")
    ln, (tok,) = header(2, "edges", 1)
    m = _int(tok, ln, "edge count")
    if n < 0 or m < 0:
        raise FormatError("negative count", ln)
    ln, (tok,) = header(3, "frame", 1)
    frame = _num(tok, ln, "frame")
    if frame <= 0:
        raise FormatError("frame must be positive", ln)
    ln, (tok,) = header(4, "freq", 1)
    freq = _num(tok, ln, "frequency", allow_dash=True)

    body = lines[5:]
    if len(body) != n + m:
        where = body[-1][0] if body else lines[-1][0]
        raise FormatError(f"expected {n} node and {m} edge lines, found {len(body)}", where)

    index = {}
    xy = []
    for lineno, toks in body[:n]:
        if toks[0] != "node" or len(toks) != 4:
            raise FormatError("expected 'node <id> <x> <y>'", lineno)
        ext = _int(toks[1], lineno, "node id")
        if ext in index:
            raise FormatError(f"duplicate node id {ext}", lineno)
        index[ext] = len(index)
        x = _num(toks[2], lineno, "x", allow_dash=True)
        y = _num(toks[3], lineno, "y", allow_dash=True)
        if (x is None) != (y is None):
            raise FormatError("x and y must both be known or both '-'", lineno)
        xy.append((lineno, x, y))

    known = [x is not None for _, x, _ in xy]
    if any(known) and not all(known):
        bad = next(ln for ln, x, _ in xy if x is None)
        raise FormatError("positions must be given for all nodes or none", bad)

    edges, rssi, seen = [], [], set()
    for lineno, toks in body[n:]:
        if toks[0] != "edge" or len(toks) != 4:
            raise FormatError("expected 'edge <u> <v> <rssi>'", lineno)
        u_ext = _int(toks[1], lineno, "endpoint")
        v_ext = _int(toks[2], lineno, "endpoint")
        for e in (u_ext, v_ext):
            if e not in index:
                raise FormatError(f"edge references unknown node {e}", lineno)
        u, v = index[u_ext], index[v_ext]
        if u == v:
            raise FormatError("self-loop", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise FormatError("duplicate edge", lineno)
        seen.add(key)
        edges.append((u, v))
        rssi.append(_num(toks[3], lineno, "rssi", allow_dash=True))

    topo = Topology(n, tuple(edges), tuple(rssi), freq, frame)
    drawing = None
    if n and all(known):
        drawing = VisualDrawing(np.array([[x, y] for _, x, y in xy]))
    return topo, drawing


def read_graph(path) -> tuple[Topology, Optional[VisualDrawing]]:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(path, topology: Topology, drawing: Optional[VisualDrawing] = None):
    Path(path).write_text(serialize_graph(topology, drawing), encoding="utf-8")


def edge_lengths(positions: np.ndarray, edges: np.ndarray) -> np.ndarray:
    if len(edges) == 0:
        return np.zeros(0)
    d = positions[edges[:, 0]] - positions[edges[:, 1]]
    return np.hypot(d[:, 0], d[:, 1])


def grid_topology(k: int, spacing: float = 1.0) -> tuple[Topology, VisualDrawing]:
    """k x k lattice with unit links; handy fixture for the boundary oracle."""
    edges = []
    pos = np.zeros((k * k, 2))
    for r in range(k):
        for c in range(k):
            i = r * k + c
            pos[i] = (c * spacing, r * spacing)
            if c + 1 < k:
                edges.append((i, i + 1))
            if r + 1 < k:
                edges.append((i, i + k))
    return Topology(k * k, tuple(edges)), VisualDrawing(pos)


def path_topology(n: int) -> Topology:
    return Topology(n, tuple((i, i + 1) for i in range(n - 1)))
