import pytest
from hypothesis import given, strategies as st

from cncah.criteria import TerminationCriteria
from cncah.errors import ConfigError, InvalidParams, UnknownNode
from cncah.harness import (
    LOG_COLUMNS, AlgorithmConfig, ConfusionCounts, IterationLog, LogRow, bench, confusion,
    fmt_metric, metrics, parse_bench_config, run_experiment,
)
from cncah.spring import initial_drawing
from cncah.topogen import generate_instance


def test_confusion_examples():
    c = confusion({1, 2}, {2, 3}, range(4))
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)
    c = confusion({0, 5}, {0, 5}, range(10))
    assert c.fn == 0 and c.fp == 0
    c = confusion({0, 5}, set(), range(10))
    assert c.tp == 0 and c.fp == 0 and c.fn == 2


def test_confusion_unknown_node():
    with pytest.raises(UnknownNode):
        confusion({1, 9}, set(), range(4))
    with pytest.raises(UnknownNode):
        confusion(set(), {-1}, range(4))


@given(st.sets(st.integers(0, 29)), st.sets(st.integers(0, 29)))
def test_confusion_partitions(truth, detected):
    c = confusion(truth, detected, range(30))
    assert c.total == 30
    sens, spec, acc = metrics(c)
    assert acc == (c.tp + c.tn) / 30
    assert acc == pytest.approx(1 - (c.fp + c.fn) / 30, abs=1e-15)


def test_metrics_examples():
    sens, spec, acc = metrics(ConfusionCounts(tp=9, fn=1, fp=5, tn=85))
    assert sens == pytest.approx(0.9)
    assert spec == pytest.approx(85 / 90)
    assert acc == pytest.approx(0.94)
    assert metrics(ConfusionCounts(4, 0, 0, 6)) == (1.0, 1.0, 1.0)
    assert metrics(ConfusionCounts(0, 0, 2, 3))[0] is None
    assert fmt_metric(None) == "NA"


def test_log_csv_layout():
    log = IterationLog({"seed": 3})
    log.append(LogRow(0, 0.0, 1.5, None, 0.5, 0.25, ConfusionCounts(0, 0, 1, 1)))
    log.append(LogRow(1, 100.0, 1.25, 1.0, 1.0, 1.0, None))
    lines = log.to_csv().splitlines()
    assert lines[0] == "# seed=3"
    assert lines[1] == ",".join(LOG_COLUMNS)
    assert lines[1] == "iter,time_ms,energy,sensitivity,specificity,accuracy,tp,fn,fp,tn"
    assert lines[2] == "0,0.0,1.5,NA,0.5,0.25,0,0,1,1"
    assert lines[3].endswith("NA,NA,NA,NA")
    with pytest.raises(ValueError):
        log.append(LogRow(1, 0, 0, None, None, None, None))


@pytest.fixture(scope="module")
def star():
    return generate_instance("star", 100, 8, 1)


def test_zero_budget_logs_initial_row(star):
    topo, truth, _, _ = star
    res = run_experiment(topo, truth, "kk", TerminationCriteria(max_iters=0), seed=4)
    assert len(res.log.rows) == 1 and res.stop_reason == "max_iters"
    init = initial_drawing(topo.n, 4)
    assert res.state.drawing.same_as(init)
    from cncah.boundary import boundary_nodes
    from cncah.harness import confusion as conf
    c = conf(res.truth, boundary_nodes(init, topo, strict=False), range(topo.n))
    assert res.final.counts == c


@pytest.mark.parametrize("alg", ["wkkms", "kk", "fr", "dh"])
def test_run_logs_every_interval(star, alg):
    topo, truth, _, _ = star
    res = run_experiment(topo, truth, alg, TerminationCriteria(max_iters=4), seed=2)
    iters = [r.iter for r in res.log.rows]
    assert iters == [0, 1, 2, 3, 4]
    assert [r.time_ms for r in res.log.rows] == [0.0, 100.0, 200.0, 300.0, 400.0]
    for r in res.log.rows:
        assert r.counts.total == topo.n
    text = res.log.to_csv()
    assert f"# algorithm={alg}" in text and "# seed=2" in text and "# stop=max_iters" in text


def test_target_stop(star):
    topo, truth, _, _ = star
    res = run_experiment(topo, truth, "kk", TerminationCriteria(target_accuracy=0.0), seed=1)
    assert res.stop_reason == "target" and res.final.iter == 0


def test_stall_window(star):
    topo, truth, _, _ = star
    crit = TerminationCriteria(stall_iters=3, max_iters=400)
    res = run_experiment(topo, truth, "kk", crit, seed=1)
    assert res.stop_reason == "stall"
    tail = [r.sensitivity for r in res.log.rows[-4:]]
    assert len(set(tail)) == 1
    # no earlier window of the same length was flat
    s = [r.sensitivity for r in res.log.rows[:-1]]
    assert not any(len(set(s[i:i + 4])) == 1 for i in range(len(s) - 3))


def test_dh_on_star_stays_below_target(star):
    topo, truth, _, _ = star
    crit = TerminationCriteria(stall_iters=100, target_sensitivity=0.9)
    res = run_experiment(topo, truth, "dh", crit, seed=1)
    assert res.stop_reason in ("stall", "converged")
    assert res.first_reaching(0.9) is None


def test_wall_clock_and_time_limit(star):
    topo, truth, _, _ = star
    res = run_experiment(topo, truth, "fr", TerminationCriteria(time_limit=0.35), seed=1,
                         time_unit_ms=100)
    assert res.stop_reason == "time_limit" and res.final.iter == 4
    res = run_experiment(topo, truth, "fr", TerminationCriteria(max_iters=2), clock="wall")
    times = [r.time_ms for r in res.log.rows]
    assert times[0] == 0.0 and times == sorted(times) and times[-1] > 0
    with pytest.raises(InvalidParams):
        run_experiment(topo, truth, "fr", TerminationCriteria(max_iters=1), clock="sundial")


def test_without_truth_only_energy(star):
    topo, _, _, _ = star
    res = run_experiment(topo, None, "kk", TerminationCriteria(max_iters=2, target_sensitivity=0.1))
    assert res.stop_reason == "max_iters"
    assert all(r.sensitivity is None for r in res.log.rows)
    assert "NA,NA,NA,NA,NA,NA,NA" in res.log.to_csv()


def test_energy_non_increasing_in_logs(star):
    topo, truth, _, _ = star
    for alg in ("kk", "wkkms"):
        res = run_experiment(topo, None, alg, TerminationCriteria(max_iters=30), seed=3)
        e = [r.energy for r in res.log.rows]
        assert all(b <= a + 1e-9 for a, b in zip(e, e[1:]))


def test_unknown_algorithm():
    with pytest.raises(InvalidParams):
        AlgorithmConfig("sa")


BENCH = """# four shapes, five instances each
nodes = 40
degree = 6
max_iters = 2
seeds = 1,2,3,4,5
[run]
shape = star
[run]
shape = u-shape
[run]
shape = smile
[run]
shape = donut
"""


def test_bench_rows_and_determinism():
    config = parse_bench_config(BENCH)
    a = bench(config)
    assert len(a.rows) == 80
    assert {r["algorithm"] for r in a.rows} == {"wkkms", "kk", "fr", "dh"}
    assert len(a.summary()) == 16 and all(s["runs"] == 5 for s in a.summary())
    b = bench(parse_bench_config(BENCH))
    assert a.rows_csv() == b.rows_csv()
    assert a.summary_csv() == b.summary_csv()
    assert a.rows_csv().splitlines()[0].startswith("shape,instance_seed,algorithm")


@pytest.mark.parametrize("text", [
    "nodes = 10\n",
    "[run]\nshape = star\nalgorithms = \n",
    "[run]\nshape = star\nalgorithms = kk,annealer\n",
    "[run]\nshape = star\ncolour = blue\n",
    "[run]\nshape = star\nnodes = many\n",
    "[run]\nnodes = 10\n",
    "[run]\nshape = star\np = 0\n",
    "[sweep]\n",
    "[run]\nshape star\n",
])
def test_bench_config_errors(text):
    with pytest.raises(ConfigError):
        parse_bench_config(text)


def test_bench_shape_path_relative_to_config(tmp_path):
    (tmp_path / "box.shape").write_text("+ rect 0.1 0.1 0.8 0.8\n")
    config = parse_bench_config("nodes = 30\n[run]\nshape = box.shape\nseeds = 1\n"
                                "algorithms = kk\nmax_iters = 1\n", base_dir=tmp_path)
    rows = bench(config).rows
    assert len(rows) == 1 and rows[0]["shape"] == "box"
