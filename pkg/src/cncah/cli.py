"""Command-line entry points.

    cncah generate --nodes 300 --degree 8 --shape donut --seed 7 -o g.graph
    cncah layout --alg wkkms -i g.graph --truth g.graph --target-sensitivity 0.9 \\
                 -o out.graph --log log.csv
    cncah boundary -i g.graph -o boundary.txt
    cncah eval --truth g.graph -i out.graph
    cncah render -i out.graph -o out.svg --highlight boundary
    cncah bench runs.cfg -o rows.csv --summary summary.csv

Exit status: 0 on success, 1 for bad input, 2 for bad usage.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .baselines import DHParams, FRParams
from .boundary import boundary_nodes, read_boundary, write_boundary
from .criteria import TerminationCriteria
from .errors import CncahError
from .graph import read_graph, serialize_graph
from .harness import (
    AlgorithmConfig,
    ALGORITHMS,
    bench,
    confusion,
    fmt_metric,
    metrics,
    parse_bench_config,
    run_experiment,
)
from .render import RenderOptions, render_svg
from .topogen import GenParams, generate_with_retries, load_mask, synthesize_rssi
from .wkkms import WkkmsParams


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_seed(p):
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")


def _add_radio(p):
    p.add_argument("--freq-mhz", type=float, default=2400.0,
                   help="radio frequency for signal strengths (default 2400)")
    p.add_argument("--frame-scale", type=float, default=100.0,
                   help="metres per unit of the drawing frame (default 100)")
    p.add_argument("--rssi-noise-sd", type=float, default=0.0,
                   help="standard deviation of signal-strength noise in dB (default 0)")


def _add_criteria(p):
    g = p.add_argument_group("termination")
    g.add_argument("--max-iters", type=int, help="evaluation intervals")
    g.add_argument("--target-sensitivity", type=float)
    g.add_argument("--target-specificity", type=float)
    g.add_argument("--target-accuracy", type=float)
    g.add_argument("--time-limit", type=float, help="seconds of logged time")
    g.add_argument("--stall-iters", type=int, help="stop when sensitivity is flat this long")


def _add_wkkms(p):
    g = p.add_argument_group("W-KK-MS")
    g.add_argument("--p", type=float, default=0.1, help="fraction of nodes per batch (default 0.1)")
    g.add_argument("--theta", type=float, default=4.0, help="folded-region threshold (default 4)")
    g.add_argument("--deltas", type=_float_list, default=(1.0, 0.95, 0.7, 0.05, 0.0),
                   help="five weight factors (default 1.0,0.95,0.7,0.05,0.0)")
    g.add_argument("--epsilon", type=float, default=0.0,
                   help="edge-adding threshold on region energy decrease (default 0)")
    g.add_argument("--anchors", type=_int_list, default=(), help="comma-separated anchor ids")
    g.add_argument("--min-region-edges", type=int, default=10)


def build_parser():
    parser = _Parser(prog="cncah", description="Layout and boundary detection for ad hoc networks.")
    parser.add_argument("--version", action="version", version=f"cncah {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="generate a network inside a shape")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--degree", type=float, required=True, help="target average degree")
    g.add_argument("--shape", required=True, help="builtin shape name or shape-script path")
    g.add_argument("--min-dist", type=float, help="minimum node spacing d")
    g.add_argument("--radius", type=float, help="maximum edge length")
    g.add_argument("--edge-prob", type=float, help="edge acceptance probability")
    g.add_argument("--min-edge", type=float, help="minimum edge length")
    g.add_argument("--max-attempts", type=int, default=10000)
    g.add_argument("--retries", type=int, default=20,
                   help="redraws with derived seeds when the graph cannot be connected")
    g.add_argument("--no-rssi", action="store_true", help="omit signal strengths")
    _add_radio(g)
    _add_seed(g)
    g.add_argument("-o", "--output", required=True)

    lay = sub.add_parser("layout", help="lay out a topology")
    lay.add_argument("--alg", choices=ALGORITHMS, default="wkkms")
    lay.add_argument("-i", "--input", required=True)
    lay.add_argument("--truth", help="graph file with ground-truth positions, for scoring")
    lay.add_argument("--use-input-positions", action="store_true",
                     help="start from the input file's positions instead of a random drawing")
    lay.add_argument("-o", "--output", required=True)
    lay.add_argument("--log", help="per-interval CSV log")
    lay.add_argument("--clock", choices=("units", "wall"), default="units")
    lay.add_argument("--time-unit-ms", type=float, default=100.0)
    _add_criteria(lay)
    _add_wkkms(lay)
    _add_seed(lay)

    b = sub.add_parser("boundary", help="boundary nodes of a drawing")
    b.add_argument("-i", "--input", required=True)
    b.add_argument("-o", "--output", help="boundary file (default: stdout)")
    b.add_argument("--lenient", action="store_true",
                   help="merge coincident nodes and overlapping edges instead of failing")

    ev = sub.add_parser("eval", help="score a drawing against ground truth")
    ev.add_argument("--truth", required=True)
    ev.add_argument("-i", "--input", required=True, help="laid-out graph file")
    ev.add_argument("--boundary", help="detected boundary file (default: computed from input)")

    r = sub.add_parser("render", help="SVG snapshot of a drawing")
    r.add_argument("-i", "--input", required=True)
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--width", type=float, default=1920)
    r.add_argument("--height", type=float, default=1080)
    r.add_argument("--radius", type=float, default=4.0)
    r.add_argument("--highlight", help="'boundary' or a boundary file")
    r.add_argument("--no-edges", action="store_true")

    bn = sub.add_parser("bench", help="batch experiments from a config file")
    bn.add_argument("config")
    bn.add_argument("-o", "--output", required=True, help="per-run CSV")
    bn.add_argument("--summary", help="per shape and algorithm summary CSV")
    bn.add_argument("--workers", type=int)
    return parser


def _criteria(args):
    fields = dict(
        max_iters=args.max_iters,
        target_sensitivity=args.target_sensitivity,
        target_specificity=args.target_specificity,
        target_accuracy=args.target_accuracy,
        time_limit=args.time_limit,
        stall_iters=args.stall_iters,
    )
    if all(v is None for v in fields.values()):
        return None
    return TerminationCriteria(**fields)


def cmd_generate(args):
    mask = load_mask(args.shape)
    params = GenParams.for_mask(
        args.nodes, args.degree, mask, seed=args.seed, d=args.min_dist, gamma=args.radius,
        gamma_b=args.edge_prob, e=args.min_edge, max_attempts=args.max_attempts,
    )
    topo, drawing, used = generate_with_retries(params, mask, args.retries)
    if not args.no_rssi and topo.m:
        topo = synthesize_rssi(drawing, topo, args.freq_mhz, args.frame_scale,
                               args.rssi_noise_sd, seed=args.seed + 1)
    settings = dict(command="generate", shape=args.shape, nodes=params.n, degree=params.delta,
                    min_dist=params.d, radius=params.gamma, edge_prob=params.gamma_b,
                    min_edge=params.e, max_attempts=params.max_attempts, seed=params.seed, gen_seed=used.seed,
                    retries=args.retries,
                    rssi=not args.no_rssi, freq_mhz=args.freq_mhz, frame_scale=args.frame_scale,
                    rssi_noise_sd=args.rssi_noise_sd)
    text = serialize_graph(topo, drawing) + "".join(f"# {k}={v}\n" for k, v in settings.items())
    Path(args.output).write_text(text, encoding="utf-8")
    return 0


def cmd_layout(args):
    topo, given = read_graph(args.input)
    truth = None
    if args.truth:
        ttopo, truth = read_graph(args.truth)
        if truth is None:
            raise CncahError(f"{args.truth}: ground truth needs node positions")
        if ttopo.n != topo.n or set(map(frozenset, ttopo.edges)) != set(map(frozenset, topo.edges)):
            raise CncahError("truth graph and input graph have different topologies")
    criteria = _criteria(args)
    if criteria is not None and criteria.has_targets and truth is None:
        raise UsageError("cncah layout: error: metric targets need --truth")
    init = None
    if args.use_input_positions:
        if given is None:
            raise CncahError(f"{args.input}: has no positions to start from")
        init = given
    config = AlgorithmConfig(
        args.alg,
        wkkms=WkkmsParams(P=args.p, deltas=args.deltas, theta=args.theta, epsilon=args.epsilon,
                          anchors=frozenset(args.anchors), min_region_edges=args.min_region_edges),
        fr=FRParams(),
        dh=DHParams(),
    )
    settings = dict(command="layout", input=args.input, truth=args.truth or "-")
    result = run_experiment(topo, truth, config, criteria, seed=args.seed, init=init,
                            clock=args.clock, time_unit_ms=args.time_unit_ms, settings=settings)
    Path(args.output).write_text(serialize_graph(topo, result.state.drawing), encoding="utf-8")
    if args.log:
        result.log.write(args.log)
    f = result.final
    print(f"stop={result.stop_reason} iters={f.iter} energy={f.energy!r} "
          f"sensitivity={fmt_metric(f.sensitivity)} specificity={fmt_metric(f.specificity)} "
          f"accuracy={fmt_metric(f.accuracy)}")
    return 0


def _positions(path):
    topo, drawing = read_graph(path)
    if drawing is None:
        raise CncahError(f"{path}: file has no node positions")
    return topo, drawing


def cmd_boundary(args):
    topo, drawing = _positions(args.input)
    nodes = boundary_nodes(drawing, topo, strict=not args.lenient)
    if args.output:
        write_boundary(args.output, nodes)
    else:
        sys.stdout.write("".join(f"{v}\n" for v in sorted(nodes)))
    return 0


def cmd_eval(args):
    ttopo, tdraw = _positions(args.truth)
    topo, drawing = read_graph(args.input)
    if topo.n != ttopo.n:
        raise CncahError("truth and input have different node counts")
    truth = boundary_nodes(tdraw, ttopo)
    if args.boundary:
        detected = read_boundary(args.boundary)
    else:
        if drawing is None:
            raise CncahError(f"{args.input}: file has no node positions")
        detected = boundary_nodes(drawing, topo, strict=False)
    c = confusion(truth, detected, range(topo.n))
    sens, spec, acc = metrics(c)
    print("sensitivity,specificity,accuracy,tp,fn,fp,tn")
    print(",".join([fmt_metric(sens), fmt_metric(spec), fmt_metric(acc),
                    str(c.tp), str(c.fn), str(c.fp), str(c.tn)]))
    return 0


def cmd_render(args):
    topo, drawing = _positions(args.input)
    highlight = frozenset()
    if args.highlight == "boundary":
        highlight = boundary_nodes(drawing, topo, strict=False)
    elif args.highlight:
        highlight = read_boundary(args.highlight)
    opts = RenderOptions(args.width, args.height, args.radius, highlight, not args.no_edges,
                         title=Path(args.input).name)
    Path(args.output).write_text(render_svg(drawing, topo, opts), encoding="utf-8")
    return 0


def cmd_bench(args):
    path = Path(args.config)
    config = parse_bench_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
    result = bench(config, workers=args.workers)
    Path(args.output).write_text(result.rows_csv(), encoding="utf-8")
    if args.summary:
        Path(args.summary).write_text(result.summary_csv(), encoding="utf-8")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "layout": cmd_layout,
    "boundary": cmd_boundary,
    "eval": cmd_eval,
    "render": cmd_render,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help and --version
        return exc.code if isinstance(exc.code, int) else 0
    except (CncahError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cncah: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
