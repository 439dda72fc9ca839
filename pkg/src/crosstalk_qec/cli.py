"""Command-line entry point: ``crosstalk-qec <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

from .circuits import build_layout, build_memory_circuit
from .decoder import build_detector_graph
from .harness import RunConfig, estimate_PL, schmidt_report, sweep, truncation_study
from .noise import NoiseConfig

CSV_COLUMNS = ("config_hash", "d", "p", "theta", "mode", "chi", "shots", "P_L", "stderr",
               "mean_max_bond", "mean_discarded_weight", "wall_time")
_MODES = {"none": "none", "coherent": "coherent", "random-sign": "random_sign", "pta": "pta"}
_POLICIES = {"gate-edge": "gate_edge", "incident": "incident_edges", "all": "all_edges"}


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--distance", type=int, default=3)
    common.add_argument("--rounds", type=int, default=None, help="default: the distance")
    common.add_argument("--basis", choices=("x", "z"), default="x")
    common.add_argument("--p", type=float, default=None, help="physical error rate")
    common.add_argument("--theta", type=float, default=None, help="crosstalk angle in radians")
    common.add_argument("--crosstalk", choices=tuple(_MODES), default=None)
    common.add_argument("--policy", choices=tuple(_POLICIES), default=None)
    common.add_argument("--chi-max", type=int, default=32)
    common.add_argument("--shots", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--config", default=None, help="noise config file (key = value lines)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--wall-time", action="store_true",
                        help="record measured wall time (output is then not reproducible)")

    parser = argparse.ArgumentParser(prog="crosstalk-qec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("memory", parents=[common], help="estimate P_L for one configuration")
    sp = sub.add_parser("sweep", parents=[common], help="P_L grid over p and distance")
    sp.add_argument("--p-grid", type=_float_list, default=[0.004, 0.0072, 0.0104, 0.0136, 0.0168, 0.02])
    sp.add_argument("--distances", type=_int_list, default=[3, 5])
    sc = sub.add_parser("schmidt", parents=[common], help="central-cut Schmidt spectrum")
    sc.set_defaults(shots=4)
    tr = sub.add_parser("truncation", parents=[common], help="P_L versus bond cap")
    tr.add_argument("--chi-list", type=_int_list, default=[8, 16, 32, 64])
    sub.add_parser("dem", parents=[common], help="emit the detector graph")
    sub.add_parser("circuit", parents=[common], help="emit the circuit text")
    return parser


def config_from_args(args) -> RunConfig:
    noise = NoiseConfig()
    if args.config:
        with open(args.config) as fh:
            noise = NoiseConfig.from_text(fh.read())
    kw = {}
    if args.p is not None:
        kw["p"] = args.p
    if args.theta is not None:
        kw["theta"] = args.theta
    if args.crosstalk is not None:
        kw["crosstalk_mode"] = _MODES[args.crosstalk]
    if args.policy is not None:
        kw["crosstalk_policy"] = _POLICIES[args.policy]
    if kw:
        noise = noise.with_(**kw)
    return RunConfig(distance=args.distance, rounds=args.rounds, basis=args.basis,
                     noise=noise, chi_max=args.chi_max)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _render_rows(rows: list[dict], fmt: str, columns, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"rows": rows}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _summary_rows(summaries, wall: bool) -> list[dict]:
    rows = []
    for s in summaries:
        r = s.row()
        r["wall_time"] = r["wall_time"] if wall else ""
        rows.append(r)
    return rows


def run(args) -> str:
    cfg = config_from_args(args)
    cmd = args.command
    if cmd == "circuit":
        layout = build_layout(cfg.distance)
        return build_memory_circuit(layout, cfg.num_rounds, cfg.basis, cfg.noise.crosstalk_policy).to_text()
    if cmd == "dem":
        layout = build_layout(cfg.distance)
        circ = build_memory_circuit(layout, cfg.num_rounds, cfg.basis, cfg.noise.crosstalk_policy)
        return build_detector_graph(circ, cfg.noise).to_text()
    if cmd == "memory":
        s = estimate_PL(cfg, args.shots, args.seed, args.threads)
        return _render_rows(_summary_rows([s], args.wall_time), args.format, CSV_COLUMNS)
    if cmd == "sweep":
        res = sweep(args.p_grid, args.distances, cfg, args.shots, args.seed, args.threads)
        rows = _summary_rows([res.summaries[(d, p)] for d in res.distances for p in res.p_grid],
                             args.wall_time)
        crossings = [{"d_small": c.d_small, "d_large": c.d_large, "p": c.p,
                      "note": c.describe()} for c in res.crossings]
        for c in res.crossings:
            print(c.describe(), file=sys.stderr)
        return _render_rows(rows, args.format, CSV_COLUMNS, {"crossings": crossings})
    if cmd == "schmidt":
        rep = schmidt_report(cfg, args.shots, args.seed, args.threads)
        slope, r2, npts = rep.fit()
        rows = [{"config_hash": cfg.config_hash(), "d": cfg.distance, "shots": rep.shots,
                 "rank": i, "lambda2": float(v)} for i, v in enumerate(rep.spectrum)]
        extra = {"fit": {"slope": slope, "r2": r2, "points": npts}}
        print(f"log(lambda^2) vs rank: slope={slope:.4g} R^2={r2:.4f} ({npts} points)", file=sys.stderr)
        return _render_rows(rows, args.format, ("config_hash", "d", "shots", "rank", "lambda2"), extra)
    if cmd == "truncation":
        out = truncation_study(cfg, args.chi_list, args.shots, args.seed, args.threads)
        return _render_rows(_summary_rows(out, args.wall_time), args.format, CSV_COLUMNS)
    raise ValueError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        text = run(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"wall time {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
