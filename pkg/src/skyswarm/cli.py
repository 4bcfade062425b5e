"""Command line: ``skyswarm {gen-network,gen-requests,plan,bench,validate}``."""

from __future__ import annotations

import argparse
import json
import sys

from .energy import DronePerformance
from .errors import ParseError, SkyswarmError
from .harness import (
    ExperimentConfig,
    NetworkParams,
    Variant,
    generate_requests,
    load_requests,
    run_experiment,
    run_variant,
    save_requests,
)
from .itinerary import dumps_itinerary, itinerary_from_json, validate_itinerary
from .network import generate_random_network, read_network, write_network
from .swarm import DeliveryRequest


def _load_drone(path) -> DronePerformance:
    if path is None:
        return DronePerformance()
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(str(e), line=e.lineno) from None
    extra = sorted(set(obj) - set(DronePerformance.__dataclass_fields__))
    if extra:
        raise ParseError(f"unknown key {extra[0]!r}", field=extra[0])
    return DronePerformance(**obj)


def cmd_gen_network(args):
    net = generate_random_network(args.nodes, args.density, tuple(args.pads), tuple(args.distances), args.seed)
    write_network(net, args.out)
    print(f"wrote {args.out}: {net.node_count} nodes, {len(net.edges)} edges")


def cmd_gen_requests(args):
    net = read_network(args.network)
    reqs = generate_requests(net, args.count, args.seed, args.max_packages, args.max_weight, args.min_packages)
    save_requests(reqs, args.out)
    print(f"wrote {args.out}: {len(reqs)} requests")


def _request_from_args(args) -> DeliveryRequest:
    if args.requests is not None:
        reqs = load_requests(args.requests)
        if not 0 <= args.index < len(reqs):
            raise ParseError(f"request index {args.index} out of range", field="index")
        return reqs[args.index]
    if args.source is None or args.dest is None or not args.weights:
        raise ParseError("give --requests FILE or --source, --dest and --weights")
    return DeliveryRequest(args.source, args.dest, tuple(args.weights))


def cmd_plan(args):
    net = read_network(args.network)
    req = _request_from_args(args)
    config = ExperimentConfig(drone=_load_drone(args.drone), path_budget=args.path_budget,
                              arrival_window_minutes=args.window)
    if args.algorithm in ("sequential", "parallel"):
        variant = Variant(args.algorithm, args.lookahead, args.max_splits if args.algorithm == "parallel" else None,
                          args.cooperative)
    else:
        variant = Variant(args.algorithm)
    it, _ = run_variant(net, req, variant, config)
    print(dumps_itinerary(it))


def cmd_bench(args):
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.network:
        overrides["network"] = NetworkParams(file=args.network)
    for key in ("request_count", "request_seed", "lookaheads", "max_splits", "path_budget"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = tuple(value) if isinstance(value, list) else value
    if args.brute_force:
        overrides["brute_force"] = True
    if args.no_timing:
        overrides["timing"] = False
    if overrides:
        config = ExperimentConfig(**{**config.__dict__, **overrides})
    rows = run_experiment(config, args.out)
    failed = sum(not r.ok for r in rows)
    print(f"{len(rows)} rows ({failed} failed) -> {args.out}/results.csv, {args.out}/summary.csv")


def cmd_validate(args):
    net = read_network(args.network)
    with open(args.itinerary) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(str(e), line=e.lineno) from None
    it = itinerary_from_json(doc)
    problems = validate_itinerary(it, net, _load_drone(args.drone), args.window)
    if problems:
        for name, msg in problems:
            print(f"invariant {name} violated: {msg}", file=sys.stderr)
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skyswarm", description="Swarm drone delivery composition over skyway networks")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-network", help="generate a random skyway network")
    g.add_argument("--nodes", type=int, default=30)
    g.add_argument("--density", type=float, default=0.1, help="target edge density 2m/(n(n-1))")
    g.add_argument("--pads", type=int, nargs=2, default=[1, 4], metavar=("LO", "HI"))
    g.add_argument("--distances", type=float, nargs=2, default=[50.0, 400.0], metavar=("LO", "HI"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_gen_network)

    g = sub.add_parser("gen-requests", help="generate random delivery requests")
    g.add_argument("--network", required=True)
    g.add_argument("--count", type=int, default=200)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--max-packages", type=int, default=10)
    g.add_argument("--min-packages", type=int, default=2)
    g.add_argument("--max-weight", type=float, default=5.0)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(func=cmd_gen_requests)

    g = sub.add_parser("plan", help="plan one request and print the itinerary as JSON")
    g.add_argument("--network", required=True)
    g.add_argument("--requests", help="request file from gen-requests")
    g.add_argument("--index", type=int, default=0, help="which request in --requests")
    g.add_argument("--source", type=int)
    g.add_argument("--dest", type=int)
    g.add_argument("--weights", type=float, nargs="+", help="package weights in kg")
    g.add_argument("--algorithm", choices=["sequential", "parallel", "dijkstra", "brute_force"],
                   default="sequential")
    g.add_argument("--lookahead", type=int, default=2)
    g.add_argument("--max-splits", type=int, default=2)
    g.add_argument("--window", type=float, default=15.0, help="arrival window in minutes")
    g.add_argument("--cooperative", action="store_true")
    g.add_argument("--path-budget", type=int, default=ExperimentConfig.path_budget)
    g.add_argument("--drone", help="JSON file of drone parameters")
    g.set_defaults(func=cmd_plan)

    g = sub.add_parser("bench", help="run an experiment grid and write CSVs")
    g.add_argument("--config", help="experiment config JSON")
    g.add_argument("--network", help="network file (overrides the config)")
    g.add_argument("--requests", dest="request_count", type=int)
    g.add_argument("--seed", dest="request_seed", type=int, help="request corpus seed")
    g.add_argument("--lookaheads", type=int, nargs="+")
    g.add_argument("--max-splits", type=int, nargs="+")
    g.add_argument("--brute-force", action="store_true")
    g.add_argument("--path-budget", type=int)
    g.add_argument("--no-timing", action="store_true", help="write plan_us as 0 for reproducible files")
    g.add_argument("-o", "--out", default="bench_output")
    g.set_defaults(func=cmd_bench)

    g = sub.add_parser("validate", help="re-simulate an itinerary and check its invariants")
    g.add_argument("--network", required=True)
    g.add_argument("--itinerary", required=True)
    g.add_argument("--window", type=float, help="arrival window to enforce")
    g.add_argument("--drone", help="JSON file of drone parameters")
    g.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except SkyswarmError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
