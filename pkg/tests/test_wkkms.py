import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cncah.errors import InvalidParams, NonPositive
from cncah.fspl import doubling_loss_db, fspl_distance, fspl_rssi
from cncah.graph import grid_topology, path_topology
from cncah.rng import SplitMix64
from cncah.spring import build_spring_model, deltas, energy, model_for
from cncah.topogen import generate_instance
from cncah.wkkms import (
    EmptyEdgeSet, Region, RoundReport, WeightMap, WkkmsParams, approx_error, bwu, calweight,
    est_region, unfold_region, wkkms_layout, wkkms_rounds,
)

from conftest import compressed_cluster, random_connected

DEFAULT_DELTAS = (1.0, 0.95, 0.7, 0.05, 0.0)


# --- free-space path loss -------------------------------------------------

def test_fspl_one_metre():
    assert fspl_rssi(1.0, 2400) == pytest.approx(27.55 - 20 * math.log10(2400), abs=1e-12)
    assert fspl_rssi(1.0, 2400) == pytest.approx(-40.0542, abs=1e-4)


@pytest.mark.parametrize("d", [0.1, 1, 10, 100])
def test_fspl_inverse(d):
    assert fspl_distance(fspl_rssi(d, 2400), 2400) == pytest.approx(d, rel=1e-9)


def test_fspl_doubling():
    assert fspl_rssi(3.0, 900) - fspl_rssi(6.0, 900) == pytest.approx(doubling_loss_db())
    assert doubling_loss_db() == pytest.approx(6.0206, abs=1e-4)


def test_fspl_errors():
    for bad in (lambda: fspl_rssi(0, 2400), lambda: fspl_rssi(1, 0),
                lambda: fspl_distance(-40, -1), lambda: fspl_rssi([1, -1], 2400)):
        with pytest.raises(NonPositive):
            bad()


def test_fspl_vectorised():
    d = np.array([0.5, 2.0, 30.0])
    assert np.allclose(fspl_distance(fspl_rssi(d, 5800), 5800), d, rtol=1e-12)


# --- calweight ------------------------------------------------------------

def test_calweight_path_trace():
    params = WkkmsParams(deltas=DEFAULT_DELTAS)
    w = calweight(path_topology(3), params, 1, SplitMix64(0), start=0)
    assert w.w == pytest.approx([0.05, 0.0475, 0.035])


def test_calweight_anchor_pinned():
    params = WkkmsParams(deltas=DEFAULT_DELTAS, anchors={2})
    topo, _ = grid_topology(4)
    w = calweight(topo, params, 3, SplitMix64(1))
    assert w[2] == 0.0
    assert all(w[i] > 0 for i in range(topo.n) if i != 2)


def test_calweight_identity_factors():
    topo, _ = grid_topology(5)
    w = calweight(topo, WkkmsParams(deltas=(1, 1, 1, 1, 1)), 7, SplitMix64(2))
    assert np.all(w.w == 1.0)


def test_calweight_start_among_top_changes():
    topo = path_topology(20)
    change = np.zeros(20)
    change[7], change[13] = 5.0, 4.0
    params = WkkmsParams(deltas=(0.0, 1.0, 1.0, 1.0, 1.0))
    starts = set()
    for seed in range(20):
        w = calweight(topo, params, 1, SplitMix64(seed), change=change)
        # delta1 = 0 zeroes exactly the starting node
        starts.add(int(np.flatnonzero(w.w == 0)[0]))
    assert starts == {7, 13}


def test_calweight_rejects_counter_zero():
    with pytest.raises(InvalidParams):
        calweight(path_topology(3), WkkmsParams(), 0, SplitMix64(0))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.lists(st.floats(0, 1), min_size=5, max_size=5),
       st.integers(1, 40))
def test_weights_stay_in_unit_interval(seed, ds, counter):
    rng = np.random.default_rng(seed)
    topo = random_connected(int(rng.integers(2, 30)), 10, rng)
    params = WkkmsParams(deltas=tuple(ds), anchors={0})
    w = calweight(topo, params, counter, SplitMix64(seed), change=rng.random(topo.n))
    assert np.all((w.w >= 0) & (w.w <= 1))


def test_weight_map_validation():
    with pytest.raises(ValueError):
        WeightMap(np.array([0.5, 1.5]))
    assert len(WeightMap.ones(4)) == 4


def test_params_validation():
    for bad in (dict(P=0), dict(P=1.5), dict(deltas=(1, 1)), dict(deltas=(1, 1, 1, 1, 2)),
                dict(theta=0), dict(min_region_edges=0)):
        with pytest.raises(InvalidParams):
            WkkmsParams(**bad)


# --- batch weight updating ------------------------------------------------

def test_bwu_zero_weight_node_is_frozen():
    rng = np.random.default_rng(1)
    topo = random_connected(10, 8, rng)
    m = model_for(topo)
    pos = rng.random((10, 2))
    w = np.ones(10)
    w[3] = 0.0
    before = pos[3].copy()
    bwu(m, pos, w, 1.0)
    assert np.array_equal(pos[3], before)


def test_bwu_all_nodes_with_p_one():
    rng = np.random.default_rng(2)
    topo = random_connected(8, 6, rng)
    m = model_for(topo)
    pos = rng.random((8, 2))
    before = pos.copy()
    bwu(m, pos, np.ones(8), 1.0)
    assert np.all(np.any(pos != before, axis=1))


def test_bwu_two_nodes_converges():
    m = build_spring_model(np.array([[0, 1], [1, 0]]), L0=0.5)
    pos = np.array([[0.0, 0.0], [1.0, 0.0]])
    bwu(m, pos, np.ones(2), 1.0)
    assert math.dist(pos[0], pos[1]) == pytest.approx(0.5, abs=1e-6)


def test_bwu_single_selection_matches_kk_argmax():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(4, 12))
        topo = random_connected(n, n, rng)
        m = model_for(topo)
        pos = rng.random((n, 2))
        expected = int(np.argmax(deltas(m, pos)))
        moved = pos.copy()
        bwu(m, moved, np.ones(n), 1.0 / n)
        changed = np.flatnonzero(np.any(moved != pos, axis=1))
        assert changed.tolist() == [expected]


def test_bwu_energy_non_increasing():
    rng = np.random.default_rng(4)
    for _ in range(10):
        topo = random_connected(15, 10, rng)
        m = model_for(topo)
        pos = rng.random((15, 2))
        e0 = energy(m, pos)
        bwu(m, pos, rng.random(15), 0.3)
        assert energy(m, pos) <= e0 + 1e-12


# --- approximation error and regions --------------------------------------

def test_approx_error_scaling():
    a = np.array([0.1, 0.4, 0.2, 0.9])
    diff, stdev, r = approx_error(a, 3.7 * a)
    assert np.allclose(diff, 0) and np.all(r == 0)


def test_approx_error_hand_values():
    # diff = [3/4 - 1, 5/4 - 1] = [-0.25, 0.25]; population sd 0.25
    diff, stdev, r = approx_error(np.array([3.0, 5.0]), np.array([1.0, 1.0]))
    assert diff == pytest.approx([-0.25, 0.25])
    assert stdev == pytest.approx(0.25)
    assert r == pytest.approx([-1.0, 1.0])


def test_approx_error_population_sd():
    rng = np.random.default_rng(8)
    a, b = rng.uniform(0.1, 2, 50), rng.uniform(0.1, 2, 50)
    diff, stdev, r = approx_error(a, b)
    ref = a / a.mean() - b / b.mean()
    assert diff == pytest.approx(ref)
    assert stdev == pytest.approx(math.sqrt(((ref - ref.mean()) ** 2).sum() / len(ref)))
    assert r == pytest.approx((ref - ref.mean()) / stdev)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 10), min_size=2, max_size=40), st.data())
def test_r_is_centred(a, data):
    b = data.draw(st.lists(st.floats(0.01, 10), min_size=len(a), max_size=len(a)))
    diff, stdev, r = approx_error(a, b)
    if stdev > 0:
        assert abs(r.mean()) < 1e-9


def test_approx_error_empty():
    with pytest.raises(EmptyEdgeSet):
        approx_error([], [])


def test_est_region_uniform_scaling():
    edges, e_init, _, _ = compressed_cluster(12)
    assert est_region(e_init, 2.5 * e_init, edges).regions == ()


def test_est_region_detects_cluster():
    edges, e_init, e_upd, chosen = compressed_cluster(12)
    rep = est_region(e_init, e_upd, edges, theta=4.0)
    # direct computation of r for the two edge populations
    m, p = len(edges), len(chosen) / len(edges)
    avg = e_upd.mean()
    gap = 1.0 - 0.2 / avg - (1.0 - 1.0 / avg)
    assert rep.r[chosen[0]] == pytest.approx((1 - p) * gap / (gap * math.sqrt(p * (1 - p))))
    assert len(rep.regions) == 1
    region = rep.regions[0]
    assert sorted(region.edges) == sorted(chosen)
    assert set(region.nodes) == set(edges[chosen].ravel().tolist())
    assert m == 264


def test_est_region_small_cluster_dropped():
    edges, e_init, e_upd, chosen = compressed_cluster(9)
    rep = est_region(e_init, e_upd, edges)
    assert rep.r[chosen].min() >= 4.0
    assert rep.regions == ()
    assert len(est_region(e_init, e_upd, edges, min_region_edges=9).regions) == 1


def test_est_region_rescaling_invariance():
    rng = np.random.default_rng(9)
    edges, e_init, e_upd, _ = compressed_cluster(12)
    e_upd = e_upd * rng.uniform(0.9, 1.1, len(e_upd))
    base = est_region(e_init, e_upd, edges)
    for c in (0.01, 3.0, 1e4):
        for rep in (est_region(c * e_init, e_upd, edges), est_region(e_init, c * e_upd, edges)):
            assert np.allclose(rep.r, base.r, atol=1e-9)
            assert rep.regions == base.regions


def test_regions_are_edge_disjoint():
    edges, e_init, e_upd, _ = compressed_cluster(12)
    # a second compressed block elsewhere in the grid
    k = 12
    block = {r * k + c for r in (0, 1, 2) for c in (0, 1, 2)}
    second = [i for i, (u, v) in enumerate(edges) if u in block and v in block]
    e_upd[second] = 0.2
    rep = est_region(e_init, e_upd, edges, theta=2.5)
    assert len(rep.regions) == 2
    assert not set(rep.regions[0].edges) & set(rep.regions[1].edges)
    assert all(len(reg.edges) >= 10 for reg in rep.regions)


# --- unfolding and the full pipeline ---------------------------------------

def test_unfold_adds_synthetic_edges_only_in_clone():
    topo = path_topology(12)
    before = topo.edges
    pos = np.column_stack([np.linspace(0, 1, 12), np.zeros(12)])
    pos[5:] = pos[5:][::-1]
    region = Region(tuple(range(12)), tuple(range(11)))
    params = WkkmsParams(P=0.5, epsilon=1e9)
    ids, local, added = unfold_region(topo, pos, region, params, 1 / 11, SplitMix64(0))
    assert added > 0
    assert topo.edges == before
    assert local.shape == (12, 2)


def test_p_zero_rejected():
    with pytest.raises(InvalidParams):
        wkkms_layout(path_topology(4), params=WkkmsParams(P=0.0))


@pytest.fixture(scope="module")
def small_instance():
    return generate_instance("u-shape", 80, 8, 3)


def test_truth_start_has_no_folded_regions(small_instance):
    topo, truth, _, _ = small_instance
    pos = truth.copy_positions()
    m = model_for(topo)
    e0 = energy(m, pos)
    report = RoundReport()
    for _ in wkkms_rounds(topo, pos, WkkmsParams(), seed=1, model=m, report=report):
        pass
    assert report.regions == ()
    assert energy(m, pos) <= e0


def test_energy_after_stage4_not_above_stage1():
    rng = np.random.default_rng(11)
    for seed in range(6):
        topo = random_connected(60, 60, rng)
        init = rng.random((60, 2))
        pos = init.copy()
        report = RoundReport()
        params = WkkmsParams(theta=1.5, min_region_edges=3)
        for _ in wkkms_rounds(topo, pos, params, seed=seed, report=report):
            pass
        assert report.energy_final <= report.energy_stage1 + 1e-9


def test_wkkms_deterministic(small_instance):
    topo, _, _, _ = small_instance
    a = wkkms_layout(topo, seed=5)
    b = wkkms_layout(topo, seed=5)
    c = wkkms_layout(topo, seed=6)
    assert a.drawing.same_as(b.drawing)
    assert not a.drawing.same_as(c.drawing)
    assert a.energy == pytest.approx(energy(model_for(topo), a.drawing), rel=1e-12)


def test_wkkms_returns_drawing_for_every_node(small_instance):
    topo, _, _, _ = small_instance
    state = wkkms_layout(topo, seed=1)
    assert len(state.drawing) == topo.n
    assert np.all(np.isfinite(state.drawing.positions))
