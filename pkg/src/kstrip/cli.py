"""Command-line entry point: ``kstrip {thresholds,sample,strip,depth,experiment}``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .hypergraph import read_hypergraph, sample_ap, sample_simple, write_hypergraph
from .thresholds import ParamsRK, solve_critical, solve_supercritical


def _cmd_thresholds(args) -> int:
    p = ParamsRK(args.r, args.k)
    crit = solve_critical(p)
    out = crit.to_dict()
    c = args.c
    if args.avg_degree is not None:
        c = args.avg_degree / args.r   # average vertex degree r*m/n -> edge density m/n
    if c is not None:
        out["supercritical"] = solve_supercritical(p, c, crit=crit).to_dict()
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for key, val in out.items():
            if key == "params":
                continue
            if isinstance(val, dict):
                for k2, v2 in val.items():
                    if k2 != "params":
                        print(f"supercritical.{k2} = {v2}")
            else:
                print(f"{key} = {val}")
    return 0


def _sample_from_args(args):
    sampler = sample_ap if args.model == "ap" else sample_simple
    return sampler(args.n, args.m, args.r, args.seed)


def _cmd_sample(args) -> int:
    g = _sample_from_args(args)
    if args.out:
        write_hypergraph(args.out, g)
    else:
        print(f"{g.n} {g.m} {g.r}")
    return 0


def _load_graph(args):
    if args.input:
        return read_hypergraph(args.input)
    if args.n is None or args.m is None or args.r is None:
        raise SystemExit("either --in or all of --n, --m, --r is required")
    return _sample_from_args(args)


def _cmd_strip(args) -> int:
    from .stripping import check_trace, parallel_strip, round_stats_from, slow_strip, write_trace
    g = _load_graph(args)
    if args.engine == "parallel":
        res = parallel_strip(g, args.k)
        summary = {"engine": "parallel", "rounds": res.rounds,
                   "core_vertices": int(len(res.core_vertices)),
                   "core_edges": int(len(res.core_edges))}
    else:
        trace = slow_strip(g, args.k, args.seed)
        stats = round_stats_from(g, trace)
        summary = {"engine": "slow", "rounds": trace.rounds, "tau": trace.tau,
                   "core_vertices": int(len(trace.core_vertices)),
                   "core_edges": int(len(trace.core_edges)),
                   "checks": check_trace(g, trace)}
        if args.trace_out:
            write_trace(args.trace_out, g, trace, stats, stride=args.trace_stride)
    print(json.dumps(summary))
    return 0


def _cmd_depth(args) -> int:
    from .depth import DepthIndex, build_R, exact_depths, extract_and_validate_sequence
    g = read_hypergraph(args.input)
    index = DepthIndex(g, args.k)
    if args.vertex is not None:
        vertices = [args.vertex]
    else:
        vertices = np.flatnonzero(index.vround > 0).tolist()
    exact = exact_depths(g, args.k) if args.exact_oracle else {}
    rows = []
    for v in vertices:
        cert = build_R(index, v)
        row = {"v": v, "level": cert.level, "R_size": len(cert.union_R),
               "lower": cert.lower_bound, "upper": cert.upper_bound}
        if args.exact_oracle:
            row["exact"] = exact[v]
        check = extract_and_validate_sequence(index, cert)
        row["sequence_valid"] = check.ok
        rows.append(row)
    if args.json:
        for row in rows:
            print(json.dumps(row))
    else:
        for row in rows:
            print(" ".join(f"{k}={v}" for k, v in row.items()))
    return 0


def _cmd_experiment(args) -> int:
    from .experiments import ExperimentConfig, run_experiment
    cfg = ExperimentConfig.from_json(args.config)
    _, fits, checks = run_experiment(cfg, args.out)
    print(json.dumps({"fits": {q: f.to_dict() for q, f in fits.items()}, "checks": checks}))
    if args.assert_ and not all(checks.values()):
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstrip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("thresholds", help="critical density and core-size predictions")
    t.add_argument("--r", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--c", type=float, help="edge density m/n for the supercritical solution")
    t.add_argument("--avg-degree", type=float, help="average vertex degree r*m/n instead of --c")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=_cmd_thresholds)

    def add_sample_args(p, required):
        p.add_argument("--model", choices=["simple", "ap"], default="simple")
        p.add_argument("--n", type=int, required=required)
        p.add_argument("--m", type=int, required=required)
        p.add_argument("--r", type=int, required=required)
        p.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("sample", help="draw a random hypergraph or configuration")
    add_sample_args(s, True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_sample)

    st = sub.add_parser("strip", help="run a peeling engine")
    st.add_argument("--in", dest="input")
    add_sample_args(st, False)
    st.add_argument("--k", type=int, required=True)
    st.add_argument("--engine", choices=["parallel", "slow"], default="slow")
    st.add_argument("--trace-out")
    st.add_argument("--trace-stride", type=int, default=1)
    st.set_defaults(func=_cmd_strip)

    d = sub.add_parser("depth", help="depth certificates for non-core vertices")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--k", type=int, required=True)
    which = d.add_mutually_exclusive_group()
    which.add_argument("--vertex", type=int)
    which.add_argument("--all", action="store_true")
    d.add_argument("--exact-oracle", action="store_true")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=_cmd_depth)

    e = sub.add_parser("experiment", help="seeded scaling study from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--out", help="output directory (overrides the config)")
    e.add_argument("--assert", dest="assert_", action="store_true")
    e.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
