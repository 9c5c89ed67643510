"""Weighted Kamada-Kawai with batch updates and folded-region unfolding.

One round has four stages:

1. ``ceil(2 P n)`` iterations of weight assignment followed by a batch update
   of the ``ceil(P n)`` nodes with the largest weighted change.
2. Edges whose drawn length disagrees with the expected length (from signal
   strengths when available) are grouped into folded regions.
3. Each region is cloned and laid out on its own, with extra edges between
   far-apart nodes whenever a batch fails to lower the region energy.
4. Repaired regions are copied back and the whole drawing gets one more
   batch update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .criteria import TerminationCriteria
from .errors import CncahError, InvalidParams
from .fspl import fspl_distance
from .graph import Topology, VisualDrawing, edge_lengths, hop_matrix
from .rng import SplitMix64
from .spring import (
    LayoutState,
    SpringModel,
    build_spring_model,
    deltas,
    drive,
    energy,
    initial_drawing,
    kk_tolerance,
    model_for,
    newton_step,
)

TOP_FRACTION = 0.1
FLAT_STDEV = 1e-12


class EmptyEdgeSet(CncahError, ValueError):
    pass


@dataclass(frozen=True)
class WkkmsParams:
    P: float = 0.1
    deltas: tuple = (1.0, 0.95, 0.7, 0.05, 0.0)
    theta: float = 4.0
    epsilon: float = 0.0
    anchors: frozenset = frozenset()
    min_region_edges: int = 10

    def __post_init__(self):
        if not (0.0 < self.P <= 1.0):
            raise InvalidParams(f"P must be in (0, 1], got {self.P}")
        if len(self.deltas) != 5 or not all(0.0 <= d <= 1.0 for d in self.deltas):
            raise InvalidParams("deltas must be five factors in [0, 1]")
        if not self.theta > 0:
            raise InvalidParams("theta must be positive")
        if self.min_region_edges < 1:
            raise InvalidParams("min_region_edges must be >= 1")
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "anchors", frozenset(int(a) for a in self.anchors))


@dataclass(frozen=True, eq=False)
class WeightMap:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __getitem__(self, i):
        return float(self.w[i])

    def __len__(self):
        return len(self.w)

    @classmethod
    def ones(cls, n):
        return cls(np.ones(n))


@dataclass(frozen=True)
class Region:
    nodes: tuple
    edges: tuple  # indices into the topology's edge list


@dataclass(frozen=True, eq=False)
class FoldedRegionReport:
    diff: np.ndarray
    stdev: float
    r: np.ndarray
    regions: tuple = ()


def _frontiers(neighbors, sn: set):
    v1 = set()
    for u in sn:
        v1.update(neighbors[u])
    v1 -= sn
    v2 = set()
    for u in v1:
        v2.update(neighbors[u])
    v2 -= sn | v1
    return v1, v2


def _pick_start(n, change, rng: SplitMix64):
    """Uniform choice among the top 10% of nodes by change (ties: lower id)."""
    if change is None:
        return rng.randbelow(n)
    change = np.asarray(change, dtype=float)
    top = max(1, math.ceil(TOP_FRACTION * n))
    order = np.lexsort((np.arange(n), -change))
    return int(order[rng.randbelow(top)])


def calweight(topology: Topology, params: WkkmsParams, counter: int, rng: SplitMix64,
              change=None, start=None) -> WeightMap:
    """Fresh weight table for one iteration.

    ``change`` holds the current per-node change used to pick starting nodes;
    ``start`` forces the first starting node.
    """
    if counter < 1:
        raise InvalidParams("counter must be >= 1")
    n = topology.n
    d1, d2, d3, d4, d5 = params.deltas
    w = np.ones(n)
    if n == 0:
        return WeightMap(w)
    nbrs = topology.neighbors
    anchors = np.array(sorted(params.anchors), dtype=np.intp)
    cap = max(1, n // 2)
    expcount = 1
    first = True
    while expcount <= counter:
        sn = start if (first and start is not None) else _pick_start(n, change, rng)
        first = False
        sn = {int(sn)}
        v1, v2 = set(), set()
        for _ in range(expcount):
            v1, v2 = _frontiers(nbrs, sn)
            w *= d4
            if v2:
                w[list(v2)] *= d3
            if v1:
                w[list(v1)] *= d2
            w[list(sn)] *= d1
            if len(anchors):
                w[anchors] *= d5
            sn = v1 if len(v1) > len(v2) else v2
            if not sn:
                break
        step = math.floor(max(n / 2.0, params.P * (len(v1) + len(v2))))
        expcount += min(max(step, 1), cap)
    return WeightMap(w)


def bwu(model: SpringModel, pos: np.ndarray, weights, P: float, seed=0) -> np.ndarray:
    """Batch update of the nodes with the largest weighted change, in place.

    The top ``k = ceil(P n)`` nodes are chosen once and then moved in sorted
    order for ``ceil(n / k)`` passes.
    """
    if not (0.0 < P <= 1.0):
        raise InvalidParams(f"P must be in (0, 1], got {P}")
    w = weights.w if isinstance(weights, WeightMap) else np.asarray(weights, dtype=float)
    n = len(pos)
    k = max(1, math.ceil(P * n))
    dm = deltas(model, pos, w, seed)
    order = np.lexsort((np.arange(n), -dm))[:k]
    selected = [int(v) for v in order if dm[v] > 0.0]
    for _ in range(math.ceil(n / k)):
        for v in selected:
            dx, dy = newton_step(model, pos, w, v, seed)
            pos[v, 0] += dx
            pos[v, 1] += dy
    return pos


def approx_error(e_init, e_updated):
    """Per-edge normalised length difference and its z-score."""
    a = np.asarray(e_init, dtype=float)
    b = np.asarray(e_updated, dtype=float)
    if a.shape != b.shape:
        raise ValueError("edge length arrays differ in size")
    if a.size == 0:
        raise EmptyEdgeSet("no edges to compare")
    ma, mb = a.mean(), b.mean()
    if ma == 0 or mb == 0:
        raise ValueError("average edge length is zero")
    diff = a / ma - b / mb
    stdev = float(diff.std())
    if stdev < FLAT_STDEV:
        return diff, stdev, np.zeros_like(diff)
    return diff, stdev, (diff - diff.mean()) / stdev


def est_region(e_init, e_updated, edges, theta=4.0, min_region_edges=10) -> FoldedRegionReport:
    """Group edges with ``r >= theta`` that share endpoints into regions.

    ``edges`` is the (m, 2) endpoint array matching the length arrays.
    Groups with fewer than ``min_region_edges`` edges are dropped.
    """
    diff, stdev, r = approx_error(e_init, e_updated)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    if len(edges) != len(r):
        raise ValueError("edge array does not match the length arrays")
    high = np.flatnonzero(r >= theta)
    regions = []
    if len(high):
        ea = edges[high]
        n = int(ea.max()) + 1
        g = coo_matrix((np.ones(len(ea)), (ea[:, 0], ea[:, 1])), shape=(n, n))
        _, label = connected_components(g, directed=False)
        comp = label[ea[:, 0]]
        for c in np.unique(comp):
            members = high[comp == c]
            if len(members) < min_region_edges:
                continue
            nodes = np.unique(edges[members].ravel())
            regions.append(Region(tuple(int(v) for v in nodes), tuple(int(e) for e in members)))
    regions.sort(key=lambda reg: reg.edges[0])
    return FoldedRegionReport(diff, stdev, r, tuple(regions))


def expected_lengths(topology: Topology, init_pos) -> np.ndarray:
    """Reference edge lengths: from signal strengths if known, else the start drawing."""
    if topology.has_rssi() and topology.m:
        return np.asarray(fspl_distance(np.array(topology.rssi, dtype=float), topology.freq_mhz),
                          dtype=float).reshape(-1)
    return edge_lengths(np.asarray(init_pos), topology.edge_array)


def _stage1(model, topology, pos, params, rng, seed, counter):
    change = deltas(model, pos, None, seed)
    w = calweight(topology, params, counter, rng, change=change)
    bwu(model, pos, w, params.P, seed)


def _far_pairs(region_topo: Topology, hops):
    """Pairs whose hop count exceeds the mean of their degrees."""
    deg = region_topo.degrees.astype(float)
    avg = (deg[:, None] + deg[None, :]) / 2.0
    iu, ju = np.nonzero(np.triu(hops > avg, 1))
    return list(zip(iu.tolist(), ju.tolist()))


def unfold_region(topology: Topology, pos, region: Region, params: WkkmsParams, unit,
                  rng: SplitMix64, seed=0):
    """Lay out a clone of the region on its own; returns (node ids, positions, edges added)."""
    sub, ids = topology.subgraph(region.nodes)
    n_sub = sub.n
    local = np.array(pos[ids])
    if n_sub < 2:
        return ids, local, 0
    model = build_spring_model(hop_matrix(sub), L0=unit * 1.0, unit=unit)
    added = 0
    for counter in range(1, math.ceil(2 * params.P * n_sub) + 1):
        change = deltas(model, local, None, seed)
        w = calweight(sub, params, counter, rng, change=change)
        e1 = energy(model, local)
        bwu(model, local, w, params.P, seed)
        e2 = energy(model, local)
        if e1 - e2 <= params.epsilon:
            extra = _far_pairs(sub, model.hops)
            if extra:
                sub = sub.with_edges(extra)
                model = build_spring_model(hop_matrix(sub), L0=unit * 1.0, unit=unit)
                added += len(extra)
    return ids, local, added


@dataclass
class RoundReport:
    """What happened in the last round, for logging and tests."""

    regions: tuple = ()
    accepted: tuple = ()
    synthetic_edges: int = 0
    energy_stage1: float = float("nan")
    energy_final: float = float("nan")


def wkkms_rounds(topology: Topology, pos: np.ndarray, params: WkkmsParams, *, seed=0,
                 e_init=None, model: Optional[SpringModel] = None, rounds: Optional[int] = 1,
                 report: Optional[RoundReport] = None) -> Iterator[np.ndarray]:
    """Run rounds in place on ``pos``, yielding after each stage-1 iteration
    and once more after stages 2 to 4.

    ``rounds=None`` keeps going until a round ends with every change below
    the classical stopping tolerance.
    """
    n = topology.n
    model = model_for(topology) if model is None else model
    e_init = expected_lengths(topology, pos) if e_init is None else np.asarray(e_init, float)
    rng = SplitMix64(seed)
    edges = topology.edge_array
    report = RoundReport() if report is None else report
    done = 0
    while rounds is None or done < rounds:
        # stage 1
        for counter in range(1, math.ceil(2 * params.P * n) + 1):
            _stage1(model, topology, pos, params, rng, seed, counter)
            yield pos
        report.energy_stage1 = energy(model, pos)

        # stage 2
        if len(edges):
            folded = est_region(e_init, edge_lengths(pos, edges), edges, params.theta,
                                params.min_region_edges)
        else:
            folded = FoldedRegionReport(np.zeros(0), 0.0, np.zeros(0))
        report.regions = folded.regions

        # stages 3 and 4
        accepted = []
        synth = 0
        for idx, region in enumerate(folded.regions):
            ids, local, added = unfold_region(topology, pos, region, params, model.unit,
                                              rng.spawn(idx), seed)
            synth += added
            sel = np.array(region.edges, dtype=np.intp)
            lookup = {int(v): i for i, v in enumerate(ids)}
            sub_edges = np.array([[lookup[int(u)], lookup[int(v)]] for u, v in edges[sel]])
            _, _, r = approx_error(e_init[sel], edge_lengths(local, sub_edges))
            if r.max() > params.theta:
                continue
            trial = np.array(pos)
            trial[ids] = local
            if energy(model, trial) <= energy(model, pos):
                pos[ids] = local
                accepted.append(idx)
        report.accepted = tuple(accepted)
        report.synthetic_edges = synth
        _stage1(model, topology, pos, params, rng, seed, 1)
        report.energy_final = energy(model, pos)
        yield pos

        done += 1
        if rounds is None and deltas(model, pos, None, seed).max() < kk_tolerance(model):
            return


def wkkms_layout(topology: Topology, init: Optional[VisualDrawing] = None,
                 params: Optional[WkkmsParams] = None,
                 termination: Optional[TerminationCriteria] = None, *, seed=0,
                 rounds: Optional[int] = 1) -> LayoutState:
    params = WkkmsParams() if params is None else params
    init = initial_drawing(topology.n, seed) if init is None else init
    model = model_for(topology)
    pos = init.copy_positions()
    steps = wkkms_rounds(topology, pos, params, seed=seed, model=model, rounds=rounds)
    iters, converged = drive(steps, termination)
    drawing = VisualDrawing(pos)
    return LayoutState(drawing, energy(model, drawing), iters, seed, converged)
