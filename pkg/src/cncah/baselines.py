"""Baseline layouts: Fruchterman-Reingold and Davidson-Harel.

Both work in the unit frame, keep nodes inside it, and yield after each
round that touches every node once (one sweep for FR, ``n`` move trials for
DH), which is the evaluation interval used by the harness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .criteria import TerminationCriteria
from .graph import Topology, VisualDrawing
from .rng import SplitMix64
from .spring import LayoutState, drive, energy, initial_drawing, model_for

_TINY = 1e-9


@dataclass(frozen=True)
class FRParams:
    c: float = 0.3          # k_opt = c * sqrt(area / n)
    t0: float = 0.1         # starting temperature, in frame lengths
    cool_iters: int = 100   # sweeps of linear cooling
    t_min: float = 0.0      # temperature floor, in frame lengths


@dataclass(frozen=True)
class DHParams:
    lambda_spread: float = 1.0
    lambda_border: float = 1.0
    lambda_edge: Optional[float] = None   # default 1 / s**4 with s = 0.5 L / sqrt(n)
    radius0: float = 0.25                 # starting move radius, in frame lengths
    cooling: float = 0.95
    stages: int = 300
    accept0: float = 0.5                  # target acceptance of an average uphill move


def fr_iter(topology: Topology, pos: np.ndarray, *, seed=0,
            params: FRParams = FRParams()) -> Iterator[np.ndarray]:
    """Force sweeps in place on ``pos``; stops after the cooling schedule."""
    n = len(pos)
    L = topology.frame
    if n < 2:
        return
    kopt = params.c * math.sqrt(L * L / n)
    edges = topology.edge_array
    rng = SplitMix64(seed)
    for it in range(params.cool_iters):
        t = max(params.t0 * L * (1.0 - it / params.cool_iters), params.t_min * L)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, 1.0)
        same = np.argwhere(dist < _TINY)
        for i, j in same:
            if i < j:
                a = 2.0 * math.pi * rng.random()
                diff[i, j] = (_TINY * math.cos(a), _TINY * math.sin(a))
                diff[j, i] = -diff[i, j]
                dist[i, j] = dist[j, i] = _TINY
        rep = (kopt * kopt / dist ** 2)
        np.fill_diagonal(rep, 0.0)
        disp = np.einsum("ij,ijk->ik", rep, diff)
        if len(edges):
            u, v = edges[:, 0], edges[:, 1]
            d = diff[u, v]
            att = (dist[u, v] / kopt)[:, None] * d
            np.add.at(disp, u, -att)
            np.add.at(disp, v, att)
        mag = np.hypot(disp[:, 0], disp[:, 1])
        scale = np.minimum(mag, t) / np.where(mag > 0, mag, 1.0)
        pos += disp * scale[:, None]
        np.clip(pos, 0.0, L, out=pos)
        yield pos


def fr_layout(topology: Topology, init: Optional[VisualDrawing] = None,
              termination: Optional[TerminationCriteria] = None, *, seed=0,
              params: FRParams = FRParams()) -> LayoutState:
    init = initial_drawing(topology.n, seed) if init is None else init
    pos = init.copy_positions()
    iters, converged = drive(fr_iter(topology, pos, seed=seed, params=params), termination)
    return _state(topology, pos, iters, seed, converged)


def _edge_weight(params: DHParams, L, n):
    if params.lambda_edge is not None:
        return params.lambda_edge
    s = 0.5 * L / math.sqrt(max(n, 1))
    return 1.0 / s ** 4


def _node_cost(pos, i, p, nbrs, L, params, lam_edge):
    d = pos - p
    d2 = d[:, 0] ** 2 + d[:, 1] ** 2
    d2[i] = np.inf
    spread = float(np.sum(1.0 / np.maximum(d2, _TINY ** 2)))
    x, y = p
    border = sum(1.0 / max(v, _TINY) ** 2 for v in (x, L - x, y, L - y))
    edge = float(d2[nbrs].sum()) if len(nbrs) else 0.0
    return params.lambda_spread * spread + params.lambda_border * border + lam_edge * edge


def dh_iter(topology: Topology, pos: np.ndarray, *, seed=0,
            params: DHParams = DHParams()) -> Iterator[np.ndarray]:
    """Simulated annealing in place on ``pos``: ``n`` trials per stage."""
    n = len(pos)
    L = topology.frame
    if n < 2:
        return
    rng = SplitMix64(seed)
    lam_edge = _edge_weight(params, L, n)
    nbrs = [np.array(a, dtype=np.intp) for a in topology.neighbors]
    # keep starting points strictly inside the frame so border terms are finite
    margin = 1e-6 * L
    np.clip(pos, margin, L - margin, out=pos)
    costs = np.array([_node_cost(pos, i, pos[i], nbrs[i], L, params, lam_edge) for i in range(n)])
    temp = -float(np.mean(costs)) * 0.01 / math.log(params.accept0)
    radius = params.radius0 * L
    floor = 0.5 * L / math.sqrt(n) * 0.05
    for _ in range(params.stages):
        for _ in range(n):
            i = rng.randbelow(n)
            a = 2.0 * math.pi * rng.random()
            p = pos[i] + radius * np.array([math.cos(a), math.sin(a)])
            np.clip(p, margin, L - margin, out=p)
            old = _node_cost(pos, i, pos[i], nbrs[i], L, params, lam_edge)
            new = _node_cost(pos, i, p, nbrs[i], L, params, lam_edge)
            change = new - old
            u = rng.random()
            if change <= 0.0 or u < math.exp(-change / temp):
                pos[i] = p
        temp *= params.cooling
        radius = max(radius * params.cooling, floor)
        yield pos


def dh_layout(topology: Topology, init: Optional[VisualDrawing] = None,
              termination: Optional[TerminationCriteria] = None, *, seed=0,
              params: DHParams = DHParams()) -> LayoutState:
    init = initial_drawing(topology.n, seed) if init is None else init
    pos = init.copy_positions()
    iters, converged = drive(dh_iter(topology, pos, seed=seed, params=params), termination)
    return _state(topology, pos, iters, seed, converged)


def _state(topology, pos, iters, seed, converged):
    drawing = VisualDrawing(pos)
    e = energy(model_for(topology), drawing) if topology.n >= 2 else 0.0
    return LayoutState(drawing, e, iters, seed, converged)
