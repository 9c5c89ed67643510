"""True boundary nodes of a drawing with known positions.

Every crossing between two edges becomes a dummy node, so the drawing turns
into a plane graph. Faces are then walked with the usual angular rule: after
arriving at ``v`` from ``u`` continue to the neighbour of ``v`` that follows
``u`` in clockwise order. Bounded faces come out counterclockwise (positive
shoelace area); the outer face comes out clockwise and has the largest
absolute area. The original nodes on it are the boundary nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometry
from .graph import Topology, VisualDrawing

_CHUNK = 256


@dataclass(frozen=True, eq=False)
class PlanarSubdivision:
    """Plane graph obtained by splitting all crossings.

    Points ``0..n_nodes-1`` are the original nodes; the rest are dummies.
    Half-edges come in twin pairs ``(2s, 2s+1)`` for sub-edge ``s``.
    """

    points: np.ndarray
    n_nodes: int
    edges: np.ndarray
    origin: np.ndarray
    next: np.ndarray
    ccw_order: np.ndarray
    ccw_start: np.ndarray
    ccw_end: np.ndarray

    @property
    def is_dummy(self) -> np.ndarray:
        flags = np.zeros(len(self.points), dtype=bool)
        flags[self.n_nodes:] = True
        return flags

    @property
    def dest(self) -> np.ndarray:
        return self.origin[np.arange(len(self.origin)) ^ 1]

    def neighbors(self, v):
        """Neighbours of point ``v`` in counterclockwise angular order."""
        hs = self.ccw_order[self.ccw_start[v]:self.ccw_end[v]]
        return tuple(int(x) for x in self.dest[hs])

    def degrees(self) -> np.ndarray:
        return self.ccw_end - self.ccw_start

    def degree(self, v):
        return int(self.ccw_end[v] - self.ccw_start[v])


@dataclass(frozen=True)
class Face:
    nodes: tuple
    area: float

    def node_set(self, n_nodes=None):
        if n_nodes is None:
            return frozenset(self.nodes)
        return frozenset(v for v in self.nodes if v < n_nodes)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _find_splits(pos, edges, strict=True):
    """Proper crossings and endpoint touches between all segment pairs.

    Returns ``(crossings, touches, overlapped)``: crossings as
    ``(seg_i, seg_j, t_i, t_j, points)``, touches as ``(seg, t, node)`` where
    ``node`` rests on the interior of ``seg``. Collinear overlaps raise unless
    ``strict`` is off, in which case each segment is split at the other's
    endpoints and ``overlapped`` is set.
    """
    m = len(edges)
    A = pos[edges[:, 0]]
    B = pos[edges[:, 1]]
    R = B - A
    RR = np.einsum("ij,ij->i", R, R)
    cross = [[] for _ in range(5)]
    touch = [[] for _ in range(3)]
    overlapped = False
    idx = np.arange(m)
    for lo in range(0, m, _CHUNK):
        I = idx[lo:lo + _CHUNK]
        ax, ay = A[I, 0][:, None], A[I, 1][:, None]
        rx, ry = R[I, 0][:, None], R[I, 1][:, None]
        bx, by = A[:, 0][None, :], A[:, 1][None, :]
        sx, sy = R[:, 0][None, :], R[:, 1][None, :]
        o1 = _cross(rx, ry, bx - ax, by - ay)
        o2 = _cross(rx, ry, bx + sx - ax, by + sy - ay)
        o3 = _cross(sx, sy, ax - bx, ay - by)
        o4 = _cross(sx, sy, ax + rx - bx, ay + ry - by)
        upper = idx[None, :] > I[:, None]

        collinear = upper & (o1 == 0) & (o2 == 0)
        if collinear.any():
            for a, b in zip(*np.nonzero(collinear)):
                if strict:
                    _check_overlap(A, B, I[a], b)
                else:
                    overlapped = True

        proper = upper & (o1 * o2 < 0) & (o3 * o4 < 0)
        ii, jj = np.nonzero(proper)
        if len(ii):
            gi = I[ii]
            ti = o3[ii, jj] / (o3[ii, jj] - o4[ii, jj])
            tj = o1[ii, jj] / (o1[ii, jj] - o2[ii, jj])
            for k, arr in enumerate((gi, jj, ti, tj, A[gi] + ti[:, None] * R[gi])):
                cross[k].append(arr)

        # an endpoint resting on the interior of another segment splits it there;
        # in non-strict mode this also cuts collinear overlaps into shared pieces
        for o_self, which in ((o1, 0), (o2, 1)):
            a_, b_ = np.nonzero((o_self == 0) & (idx[None, :] != I[:, None]))
            if not len(a_):
                continue
            seg = I[a_]
            p = (A if which == 0 else B)[b_]
            t = np.einsum("ij,ij->i", p - A[seg], R[seg]) / RR[seg]
            ok = (t > 0.0) & (t < 1.0)
            touch[0].append(seg[ok])
            touch[1].append(t[ok])
            touch[2].append(edges[b_[ok], which])

    def cat(parts, dt):
        return np.concatenate(parts) if parts else np.zeros(0, dt)

    crossings = (
        cat(cross[0], np.intp), cat(cross[1], np.intp), cat(cross[2], float), cat(cross[3], float),
        np.concatenate(cross[4]) if cross[4] else np.zeros((0, 2)),
    )
    touches = (cat(touch[0], np.intp), cat(touch[1], float), cat(touch[2], np.intp))
    return crossings, touches, overlapped


def _check_overlap(A, B, i, j):
    r = B[i] - A[i]
    rr = float(np.dot(r, r))
    t0 = float(np.dot(A[j] - A[i], r)) / rr
    t1 = float(np.dot(B[j] - A[i], r)) / rr
    lo, hi = min(t0, t1), max(t0, t1)
    if min(hi, 1.0) - max(lo, 0.0) > 0.0:
        raise DegenerateGeometry(f"edges {i} and {j} overlap collinearly")


def _merge_coincident(pos, edges):
    """Representative id per node (lowest id at the same position) and the
    edge list rewritten onto representatives, without loops or repeats."""
    _, first, inv = np.unique(pos, axis=0, return_index=True, return_inverse=True)
    rep = first[inv.ravel()]
    if len(edges) == 0:
        return rep, edges
    e = np.sort(rep[edges], axis=1)
    e = e[e[:, 0] != e[:, 1]]
    e = np.unique(e, axis=0) if len(e) else e.reshape(0, 2)
    return rep, e


def split_crossings(drawing: VisualDrawing, topology: Topology,
                    strict: bool = True) -> PlanarSubdivision:
    """Plane graph of the drawing.

    With ``strict`` (the default) coincident nodes and collinear overlapping
    edges raise :class:`DegenerateGeometry`. Otherwise coincident nodes are
    merged into the lowest id among them (the others stay isolated) and
    overlapping edges share their common pieces.
    """
    pos = np.asarray(drawing.positions, dtype=float)
    n = topology.n
    if len(pos) != n:
        raise ValueError("drawing does not match topology")
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    edges = topology.edge_array
    if n and len(np.unique(pos, axis=0)) < n:
        if strict:
            raise DegenerateGeometry("two nodes share a position")
        _, edges = _merge_coincident(pos, edges)
    m = len(edges)

    seg = [np.arange(m), np.arange(m)]
    t = [np.zeros(m), np.ones(m)]
    ids = [edges[:, 0], edges[:, 1]] if m else [np.zeros(0, np.intp)] * 2
    points = pos
    overlapped = False
    if m > 1:
        (ci, cj, ti, tj, cpt), (ts, tt, tn), overlapped = _find_splits(pos, edges, strict)
        # concurrent crossings share one dummy; a crossing exactly on a node uses the node
        allpts = np.vstack([pos, cpt])
        _, first, inv = np.unique(allpts, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        fresh = np.flatnonzero(first >= n)
        fresh = fresh[np.argsort(first[fresh], kind="stable")]
        gid = np.array(first, dtype=np.intp)
        gid[fresh] = n + np.arange(len(fresh))
        cid = gid[inv[n:]]
        points = np.vstack([pos, allpts[first[fresh]]])
        seg += [ci, cj, ts]
        t += [ti, tj, tt]
        ids += [cid, cid, tn]
    seg = np.concatenate(seg)
    t = np.concatenate(t)
    ids = np.concatenate(ids).astype(np.intp)

    order = np.lexsort((t, seg))
    seg, ids = seg[order], ids[order]
    same = seg[1:] == seg[:-1]
    a, b = ids[:-1][same], ids[1:][same]
    keep = a != b
    sub = np.stack([a[keep], b[keep]], axis=1) if keep.any() else np.zeros((0, 2), np.intp)
    if overlapped and len(sub):
        # pieces shared by overlapping edges are kept once
        key = np.sort(sub, axis=1)
        _, first = np.unique(key, axis=0, return_index=True)
        sub = sub[np.sort(first)]

    return _half_edges(points, n, sub)


def _half_edges(points, n_nodes, sub):
    s = len(sub)
    origin = np.empty(2 * s, dtype=np.intp)
    origin[0::2] = sub[:, 0]
    origin[1::2] = sub[:, 1]
    dest = origin[np.arange(2 * s) ^ 1]
    vec = points[dest] - points[origin]
    angle = np.arctan2(vec[:, 1], vec[:, 0])
    order = np.lexsort((angle, origin))
    rank = np.empty(2 * s, dtype=np.intp)
    rank[order] = np.arange(2 * s)
    sorted_origin = origin[order]
    npts = len(points)
    start = np.searchsorted(sorted_origin, np.arange(npts), side="left")
    end = np.searchsorted(sorted_origin, np.arange(npts), side="right")
    # clockwise successor of h around its origin = predecessor in ccw order
    prev_rank = np.where(rank - 1 >= start[origin], rank - 1, end[origin] - 1)
    cw_next = order[prev_rank]
    nxt = cw_next[np.arange(2 * s) ^ 1]
    return PlanarSubdivision(points, n_nodes, sub, origin, nxt, order, start, end)


def _shoelace(points, cycle):
    p = points[np.asarray(cycle)]
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def traverse_faces(sub: PlanarSubdivision) -> list[Face]:
    """All faces of the subdivision, each half-edge used exactly once.

    The half-edge walk cannot produce the same face twice, so no merging of
    duplicates is needed; a bridge shows up twice inside one face.
    """
    seen = np.zeros(len(sub.origin), dtype=bool)
    nxt = sub.next.tolist()
    origin = sub.origin.tolist()
    faces = []
    for h0 in range(len(origin)):
        if seen[h0]:
            continue
        cycle = []
        h = h0
        while not seen[h]:
            seen[h] = True
            cycle.append(origin[h])
            h = nxt[h]
        faces.append(Face(tuple(cycle), _shoelace(sub.points, cycle)))
    return faces


def largest_face(faces, n_nodes=None) -> Face:
    """Face with the largest absolute area.

    Ties (a lone cycle has equal inner and outer areas) prefer the
    clockwise face, then more nodes, then the smaller sorted node tuple.
    """
    amax = max(abs(f.area) for f in faces)
    tied = [f for f in faces if abs(f.area) >= amax * (1.0 - 1e-9)]

    def key(f):
        nodes = tuple(sorted(f.node_set(n_nodes)))
        return (f.area > 0, -len(nodes), nodes)

    return min(tied, key=key)


def outer_face(sub: PlanarSubdivision) -> Face:
    """Walk only the outer face, starting at the lowest leftmost node."""
    if len(sub.origin) == 0:
        raise ValueError("subdivision has no edges")
    pts = sub.points[: sub.n_nodes]
    cand = np.flatnonzero(sub.degrees()[: sub.n_nodes] > 0)
    v = int(cand[np.lexsort((pts[cand, 1], pts[cand, 0]))[0]])
    # the outer wedge at v is the one after the largest outgoing angle
    h0 = int(sub.ccw_order[sub.ccw_end[v] - 1])
    cycle = []
    h = h0
    nxt = sub.next
    while True:
        cycle.append(int(sub.origin[h]))
        h = int(nxt[h])
        if h == h0:
            break
    return Face(tuple(cycle), _shoelace(sub.points, cycle))


def boundary_nodes(drawing: VisualDrawing, topology: Topology, strict: bool = True) -> frozenset:
    """Original nodes on the outer face.

    In non-strict mode every node sharing a position with a boundary node is
    reported as well.
    """
    if topology.n == 0:
        return frozenset()
    if topology.m == 0:
        if topology.n == 1:
            return frozenset({0})
        return frozenset(range(topology.n))
    sub = split_crossings(drawing, topology, strict)
    found = outer_face(sub).node_set(topology.n)
    if strict:
        return found
    rep, _ = _merge_coincident(np.asarray(drawing.positions, dtype=float), topology.edge_array)
    return frozenset(int(v) for v in np.flatnonzero(np.isin(rep, list(found))))


def write_boundary(path, nodes):
    text = "".join(f"{v}\n" for v in sorted(int(v) for v in nodes))
    Path(path).write_text(text, encoding="utf-8")


def read_boundary(path) -> frozenset:
    out = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(int(line))
    return frozenset(out)
