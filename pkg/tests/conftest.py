import numpy as np
import pytest

from cncah.graph import Topology

_REPORT = []


@pytest.fixture
def report():
    """Collects one-line results that are echoed in the terminal summary."""
    return _REPORT.append


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("reported results")
        for line in _REPORT:
            terminalreporter.write_line(line)


def random_connected(n, extra, rng):
    """Random spanning tree plus ``extra`` random chords."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    tries = 0
    while len(edges) < n - 1 + extra and tries < 1000:
        u, v = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((u, v))
        tries += 1
    return Topology(n, tuple(sorted(edges)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def compressed_cluster(count, k=12, factor=5.0):
    """Unit grid whose first ``count`` edges inside a 3x3 node block are
    drawn ``factor`` times shorter. Returns (edges, e_init, e_updated, block)."""
    from cncah.graph import grid_topology

    topo, _ = grid_topology(k)
    edges = topo.edge_array
    block = {r * k + c for r in (4, 5, 6) for c in (4, 5, 6)}
    inside = [i for i, (u, v) in enumerate(edges) if u in block and v in block]
    # reading order of the later endpoint keeps every prefix connected
    inside.sort(key=lambda i: (edges[i].max(), edges[i].min()))
    chosen = inside[:count]
    e_init = np.ones(len(edges))
    e_updated = e_init.copy()
    e_updated[chosen] = 1.0 / factor
    return edges, e_init, e_updated, chosen
