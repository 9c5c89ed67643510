"""Spring model shared by the Kamada-Kawai family of layouts.

Pair (i, j) carries a spring of rest length ``l_ij = L0 * d_ij / max(d)``
and stiffness ``k_ij = K / d_ij**2`` where ``d`` is the hop-count matrix.
The total energy is ``sum_{i<j} 1/2 k_ij (|p_i - p_j| - l_ij)**2``.

Node weights scale the contribution of a node: the weighted change of node
``i`` is ``w_i`` times the gradient of the energy with respect to ``p_i``.
Newton steps are taken on the node-local energy
``w_i * sum_j 1/2 k_ij (|p_i - p_j| - l_ij)**2`` with every other node
fixed; a positive weight does not change the step, it only changes which
nodes get picked.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .criteria import TerminationCriteria
from .errors import DegenerateGraph
from .graph import Topology, VisualDrawing, hop_matrix
from .rng import mix64, random_positions

COINCIDENT = 1e-12
JITTER = 1e-9
MAX_HALVINGS = 20


@dataclass(frozen=True, eq=False)
class SpringModel:
    hops: np.ndarray
    L0: float
    K: float
    unit: float
    l: np.ndarray
    k: np.ndarray

    @property
    def n(self):
        return len(self.hops)


def build_spring_model(hops, L0=1.0, K=1.0, unit=None) -> SpringModel:
    """Ideal lengths and stiffnesses from hop counts.

    ``unit`` overrides the length of one hop (``L0 / max d`` by default); it
    lets a subgraph keep the scale of the graph it was cut from.
    """
    hops = np.asarray(hops)
    n = len(hops)
    if n < 2:
        raise DegenerateGraph(f"spring model needs at least 2 nodes, got {n}")
    if not (L0 > 0 and K > 0):
        raise ValueError("L0 and K must be positive")
    d = hops.astype(float)
    dmax = d.max()
    if unit is None:
        unit = L0 / dmax
    l = unit * d
    with np.errstate(divide="ignore"):
        k = np.where(d > 0, K / np.where(d > 0, d, 1.0) ** 2, 0.0)
    np.fill_diagonal(l, 0.0)
    np.fill_diagonal(k, 0.0)
    l.setflags(write=False)
    k.setflags(write=False)
    return SpringModel(hops, float(L0), float(K), float(unit), l, k)


def model_for(topology: Topology, L0=None, K=1.0) -> SpringModel:
    return build_spring_model(hop_matrix(topology), topology.frame if L0 is None else L0, K)


@dataclass(eq=False)
class LayoutState:
    drawing: VisualDrawing
    energy: float
    iterations: int
    rng_seed: int
    converged: bool = False


def _as_pos(drawing) -> np.ndarray:
    if isinstance(drawing, VisualDrawing):
        return drawing.positions
    return np.asarray(drawing, dtype=float)


def _weights(weights, n):
    if weights is None:
        return np.ones(n)
    if isinstance(weights, dict):
        return np.array([weights[i] for i in range(n)], dtype=float)
    return np.asarray(weights, dtype=float)


def _jitter_vector(i, j, seed, L0):
    """Seed-derived offset for a coincident pair; antisymmetric in (i, j)."""
    a, b = (int(i), int(j)) if i < j else (int(j), int(i))
    h = mix64((int(seed) * 0x100000001B3) ^ (a * 0x9E3779B1 + b))
    angle = 2.0 * math.pi * (h / 2.0**64)
    v = JITTER * L0 * np.array([math.cos(angle), math.sin(angle)])
    return v if i < j else -v


def _row(model: SpringModel, pos, i, seed):
    """Offsets p_i - p_j and distances from node i, jittering coincident pairs."""
    diff = pos[i] - pos
    rho = np.hypot(diff[:, 0], diff[:, 1])
    close = np.flatnonzero(rho < COINCIDENT)
    for j in close:
        if j == i:
            continue
        diff[j] = _jitter_vector(i, j, seed, model.L0)
        rho[j] = JITTER * model.L0
    rho[i] = 1.0
    return diff, rho


def _row_terms(model, pos, i, seed):
    """Per-partner gradient contributions k_ij (1 - l_ij/rho_ij)(p_i - p_j)."""
    diff, rho = _row(model, pos, i, seed)
    coef = model.k[i] * (1.0 - model.l[i] / rho)
    coef[i] = 0.0
    return coef[:, None] * diff


def energy(model: SpringModel, drawing, weights=None) -> float:
    """Total spring energy; with weights, pair (i<j) is scaled by ``w_i``."""
    pos = _as_pos(drawing)
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    terms = 0.5 * model.k * (dist - model.l) ** 2
    iu = np.triu_indices(n, 1)
    if weights is None:
        return float(terms[iu].sum())
    w = _weights(weights, n)
    return float((w[:, None] * terms)[iu].sum())


def node_energy(model: SpringModel, drawing, i, weights=None) -> float:
    """Energy of the springs attached to node ``i``, scaled by ``w_i``."""
    pos = _as_pos(drawing)
    d = pos[i] - pos
    rho = np.hypot(d[:, 0], d[:, 1])
    terms = 0.5 * model.k[i] * (rho - model.l[i]) ** 2
    terms[i] = 0.0
    w = 1.0 if weights is None else _weights(weights, len(pos))[i]
    return float(w * terms.sum())


def gradients(model: SpringModel, drawing, weights=None, seed=0) -> np.ndarray:
    """Weighted gradient (g_x, g_y) for every node, shape (n, 2)."""
    pos = _as_pos(drawing)
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, 1.0)
    bad = np.argwhere(dist < COINCIDENT)
    for i, j in bad:
        diff[i, j] = _jitter_vector(i, j, seed, model.L0)
        dist[i, j] = JITTER * model.L0
    coef = model.k * (1.0 - model.l / dist)
    np.fill_diagonal(coef, 0.0)
    g = np.einsum("ij,ijk->ik", coef, diff)
    return _weights(weights, n)[:, None] * g


def deltas(model: SpringModel, drawing, weights=None, seed=0) -> np.ndarray:
    g = gradients(model, drawing, weights, seed)
    return np.hypot(g[:, 0], g[:, 1])


def gradient(model: SpringModel, drawing, weights, i, seed=0) -> np.ndarray:
    pos = _as_pos(drawing)
    w = _weights(weights, len(pos))[i]
    return w * _row_terms(model, pos, i, seed).sum(axis=0)


def delta(model: SpringModel, drawing, weights, i, seed=0) -> float:
    """Magnitude of the weighted change of node ``i``."""
    g = gradient(model, drawing, weights, i, seed)
    return float(math.hypot(g[0], g[1]))


def _local_energy(model, pos, i, p):
    d = p - pos
    rho = np.hypot(d[:, 0], d[:, 1])
    t = model.k[i] * (rho - model.l[i]) ** 2
    t[i] = 0.0
    return 0.5 * float(t.sum())


def newton_step(model: SpringModel, drawing, weights, i, seed=0) -> tuple[float, float]:
    """Displacement of node ``i`` that does not increase the energy.

    A Newton step on the node-local energy is tried first. If the Hessian is
    not positive definite, or the step raises the energy, a gradient step of
    length ``|g| / sum_j k_ij`` is halved until the energy drops (at most 20
    times).
    """
    pos = _as_pos(drawing)
    w = _weights(weights, len(pos))[i]
    if w <= 0.0:
        return 0.0, 0.0
    diff, rho = _row(model, pos, i, seed)
    k, l = model.k[i], model.l[i]
    lr = l / rho
    coef = k * (1.0 - lr)
    coef[i] = 0.0
    gx = float((coef * diff[:, 0]).sum())
    gy = float((coef * diff[:, 1]).sum())
    if gx == 0.0 and gy == 0.0:
        return 0.0, 0.0
    c3 = k * lr / (rho * rho)
    c3[i] = 0.0
    ksum = float(k.sum())
    hxx = ksum - float((c3 * diff[:, 1] ** 2).sum())
    hyy = ksum - float((c3 * diff[:, 0] ** 2).sum())
    hxy = float((c3 * diff[:, 0] * diff[:, 1]).sum())
    e0 = _local_energy(model, pos, i, pos[i])
    det = hxx * hyy - hxy * hxy
    # only a positive definite Hessian gives a descent direction; Newton on an
    # indefinite one is attracted to saddles (e.g. a path folded onto a line)
    if math.isfinite(det) and det > 1e-12 * ksum * ksum and hxx > 0.0:
        dx = (-hyy * gx + hxy * gy) / det
        dy = (hxy * gx - hxx * gy) / det
        if math.isfinite(dx) and math.isfinite(dy):
            e1 = _local_energy(model, pos, i, pos[i] + (dx, dy))
            if e1 <= e0:
                return dx, dy
    step = 1.0 / ksum
    for _ in range(MAX_HALVINGS + 1):
        dx, dy = -step * gx, -step * gy
        if _local_energy(model, pos, i, pos[i] + (dx, dy)) < e0:
            return dx, dy
        step *= 0.5
    return 0.0, 0.0


def kk_tolerance(model: SpringModel):
    return 1e-6 * model.L0


def kk_iter(model: SpringModel, pos: np.ndarray, *, seed=0, tol=None,
            interval=None) -> Iterator[np.ndarray]:
    """Classical Kamada-Kawai: always move the node with the largest change.

    Works in place on ``pos`` and yields it after every ``interval`` node
    updates (default ``n``). Returns once the largest change drops below
    ``tol``; a final partial interval is yielded first.
    """
    n = len(pos)
    tol = kk_tolerance(model) if tol is None else tol
    interval = n if interval is None else interval
    g = gradients(model, pos, None, seed)
    done = 0
    while True:
        mag = np.hypot(g[:, 0], g[:, 1])
        m = int(np.argmax(mag))
        if mag[m] < tol:
            if done % interval:
                yield pos
            return
        old = _row_terms(model, pos, m, seed)
        dx, dy = newton_step(model, pos, None, m, seed)
        pos[m, 0] += dx
        pos[m, 1] += dy
        new = _row_terms(model, pos, m, seed)
        # contribution of m to g_j is -(term_j) since the coefficient is symmetric
        g += old - new
        g[m] = new.sum(axis=0)
        done += 1
        if done % interval == 0:
            g = gradients(model, pos, None, seed)
            yield pos


def initial_drawing(n, seed) -> VisualDrawing:
    """Uniform random start in the unit frame, drawn from the run seed."""
    return VisualDrawing(random_positions(n, seed))


def drive(steps, criteria: Optional[TerminationCriteria], started=None):
    """Advance a layout iterator until it finishes or the budget runs out.

    Returns ``(intervals, converged)``.
    """
    started = time.perf_counter() if started is None else started
    iters = 0
    if criteria is not None and criteria.budget_exhausted(iters, started):
        return iters, False
    for _ in steps:
        iters += 1
        if criteria is not None and criteria.budget_exhausted(iters, started):
            return iters, False
    return iters, True


def kk_layout(topology: Topology, init: Optional[VisualDrawing] = None,
              termination: Optional[TerminationCriteria] = None, *, seed=0,
              K=1.0, tol=None) -> LayoutState:
    init = initial_drawing(topology.n, seed) if init is None else init
    model = model_for(topology, K=K)
    pos = init.copy_positions()
    iters, converged = drive(kk_iter(model, pos, seed=seed, tol=tol), termination)
    drawing = VisualDrawing(pos)
    return LayoutState(drawing, energy(model, drawing), iters, seed, converged)
