"""Request generation, experiment grids, and CSV output.

An experiment crosses a request corpus with a list of algorithm variants
(sequential and parallel planners over lookahead / split settings, plus the
two baselines).  Each (request, variant) pair yields one :class:`ResultRow`.
Rows are grouped by hop count, the number of nodes on the shortest path
from source to destination including both endpoints.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Sequence

from .baselines import DEFAULT_PATH_BUDGET, brute_force_oracle, dijkstra_baseline
from .energy import DronePerformance
from .errors import InvalidParameter, ParseError, SkyswarmError
from .itinerary import Itinerary
from .network import SkywayNetwork, generate_random_network, read_network, shortest_path
from .planner import PlannerConfig, compose_parallel, compose_sequential
from .swarm import MIN_SUBSWARM, DeliveryRequest, build_swarm

RAW_COLUMNS = ["request_id", "algorithm", "lookahead", "max_splits", "cooperative", "hops", "total_min",
               "travel_min", "charge_min", "wait_min", "spread_min", "plan_us", "status"]
SUMMARY_COLUMNS = ["algorithm", "lookahead", "max_splits", "cooperative", "hops", "n", "failed", "total_min",
                   "travel_min", "charge_min", "wait_min", "spread_min", "plan_us"]
METRICS = ["total_min", "travel_min", "charge_min", "wait_min", "spread_min", "plan_us"]


def generate_requests(net: SkywayNetwork, count: int, seed: int, max_packages: int = 10,
                      max_weight: float = 5.0, min_packages: int = MIN_SUBSWARM) -> list[DeliveryRequest]:
    """Random requests: distinct endpoints and package count uniform, weights uniform in ``(0, max_weight]``."""
    if count < 1:
        raise InvalidParameter("request count must be at least 1")
    if net.node_count < 2:
        raise InvalidParameter("need at least two nodes for a request")
    if not MIN_SUBSWARM <= min_packages <= max_packages:
        raise InvalidParameter(f"need {MIN_SUBSWARM} <= min_packages <= max_packages")
    if not max_weight > 0:
        raise InvalidParameter("max_weight must be positive")
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        source, destination = rng.sample(range(net.node_count), 2)
        k = rng.randint(min_packages, max_packages)
        # 1 - random() lies in (0, 1], so weights never hit zero
        weights = tuple(max_weight * (1.0 - rng.random()) for _ in range(k))
        out.append(DeliveryRequest(source, destination, weights))
    return out


def save_requests(requests: Sequence[DeliveryRequest], path) -> None:
    with open(path, "w") as f:
        json.dump([r.to_json() for r in requests], f, indent=1)
        f.write("\n")


def load_requests(path) -> list[DeliveryRequest]:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(str(e), line=e.lineno) from None
    if not isinstance(data, list):
        raise ParseError("request file must hold a JSON array", field="requests")
    out = []
    for k, obj in enumerate(data):
        try:
            out.append(DeliveryRequest.from_json(obj))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad request: {e}", field=f"requests[{k}]") from None
    return out


@dataclass(frozen=True)
class Variant:
    algorithm: str  # sequential | parallel | dijkstra | brute_force
    lookahead: int | None = None
    max_splits: int | None = None
    cooperative: bool | None = None

    @property
    def label(self) -> str:
        parts = [self.algorithm]
        if self.lookahead is not None:
            parts.append(f"l{self.lookahead}")
        if self.max_splits is not None:
            parts.append(f"x{self.max_splits}")
        if self.cooperative:
            parts.append("coop")
        return "-".join(parts)


@dataclass
class NetworkParams:
    node_count: int = 30
    edge_density: float = 0.1
    pad_range: tuple[int, int] = (1, 4)
    distance_range: tuple[float, float] = (50.0, 400.0)
    seed: int = 0
    file: str | None = None

    def build(self) -> SkywayNetwork:
        if self.file is not None:
            return read_network(self.file)
        return generate_random_network(self.node_count, self.edge_density, self.pad_range, self.distance_range,
                                       self.seed)


@dataclass
class ExperimentConfig:
    network: NetworkParams = field(default_factory=NetworkParams)
    drone: DronePerformance = field(default_factory=DronePerformance)
    request_count: int = 200
    request_seed: int = 1
    max_packages: int = 10
    min_packages: int = MIN_SUBSWARM
    max_weight_kg: float = 5.0
    lookaheads: tuple[int, ...] = (2,)
    max_splits: tuple[int, ...] = (2,)
    cooperative: tuple[bool, ...] = (False,)
    sequential: bool = True
    parallel: bool = True
    dijkstra: bool = True
    brute_force: bool = False
    path_budget: int = DEFAULT_PATH_BUDGET
    arrival_window_minutes: float = 15.0
    timing: bool = True
    timing_repeats: int = 1

    def __post_init__(self):
        if self.request_count < 1:
            raise InvalidParameter("request_count must be at least 1")
        if self.timing_repeats < 1:
            raise InvalidParameter("timing_repeats must be at least 1")

    def variants(self) -> list[Variant]:
        out = []
        if self.sequential:
            out += [Variant("sequential", l, None, c) for l in self.lookaheads for c in self.cooperative]
        if self.parallel:
            # cooperative charging applies to sequential composition only
            out += [Variant("parallel", l, x, False) for l in self.lookaheads for x in self.max_splits]
        if self.dijkstra:
            out.append(Variant("dijkstra"))
        if self.brute_force:
            out.append(Variant("brute_force"))
        return out

    @classmethod
    def from_json(cls, obj: dict, base_dir: str | os.PathLike = ".") -> ExperimentConfig:
        known = {"network", "drone", "requests", "planners", "baselines", "timing", "timing_repeats"}
        _no_unknown(obj, known, "")
        kw = {}
        net = dict(obj.get("network", {}))
        _no_unknown(net, {"file", "node_count", "edge_density", "pad_range", "distance_range", "seed"}, "network")
        if "file" in net:
            net["file"] = str(FsPath(base_dir) / net["file"])
        for key in ("pad_range", "distance_range"):
            if key in net:
                net[key] = tuple(net[key])
        kw["network"] = NetworkParams(**net)
        if "drone" in obj:
            drone = obj["drone"]
            _no_unknown(drone, set(DronePerformance.__dataclass_fields__), "drone")
            kw["drone"] = DronePerformance(**drone)
        req = obj.get("requests", {})
        _no_unknown(req, {"count", "seed", "max_packages", "min_packages", "max_weight_kg"}, "requests")
        for src, dst in (("count", "request_count"), ("seed", "request_seed"), ("max_packages", "max_packages"),
                         ("min_packages", "min_packages"), ("max_weight_kg", "max_weight_kg")):
            if src in req:
                kw[dst] = req[src]
        pl = obj.get("planners", {})
        _no_unknown(pl, {"lookaheads", "max_splits", "cooperative", "sequential", "parallel",
                         "arrival_window_minutes"}, "planners")
        for key in ("lookaheads", "max_splits", "cooperative"):
            if key in pl:
                kw[key] = tuple(pl[key])
        for key in ("sequential", "parallel", "arrival_window_minutes"):
            if key in pl:
                kw[key] = pl[key]
        bl = obj.get("baselines", {})
        _no_unknown(bl, {"dijkstra", "brute_force", "path_budget"}, "baselines")
        kw.update(bl)
        if "timing" in obj:
            kw["timing"] = bool(obj["timing"])
        if "timing_repeats" in obj:
            kw["timing_repeats"] = int(obj["timing_repeats"])
        try:
            return cls(**kw)
        except TypeError as e:
            raise ParseError(str(e)) from None

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        with open(path) as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as e:
                raise ParseError(str(e), line=e.lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("config must be a JSON object")
        return cls.from_json(obj, FsPath(path).parent)


def _no_unknown(obj, known, where):
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", field=where or None)
    extra = sorted(set(obj) - set(known))
    if extra:
        raise ParseError(f"unknown key {extra[0]!r}", field=f"{where}.{extra[0]}" if where else extra[0])


@dataclass
class ResultRow:
    request_id: int
    variant: Variant
    hops: int
    total_min: float = 0.0
    travel_min: float = 0.0
    charge_min: float = 0.0
    wait_min: float = 0.0
    spread_min: float = 0.0
    plan_us: int = 0
    status: str = "ok"
    itinerary: Itinerary | None = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_fields(self) -> list:
        v = self.variant
        return [self.request_id, v.algorithm, _blank(v.lookahead), _blank(v.max_splits), _blank(v.cooperative),
                self.hops, _num(self.total_min), _num(self.travel_min), _num(self.charge_min), _num(self.wait_min),
                _num(self.spread_min), self.plan_us, self.status]


def _blank(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return x


def _num(x: float) -> str:
    return repr(float(x))


def run_variant(net: SkywayNetwork, request: DeliveryRequest, variant: Variant, config: ExperimentConfig):
    """Plan one request with one variant; returns ``(itinerary, microseconds)``.

    The time is the fastest of ``config.timing_repeats`` identical calls.
    """
    perf = config.drone
    swarm = build_swarm(request, perf)
    if variant.algorithm in ("sequential", "parallel"):
        pc = PlannerConfig(lookahead=variant.lookahead, max_splits=variant.max_splits or 2,
                           arrival_window_minutes=config.arrival_window_minutes,
                           cooperative=bool(variant.cooperative))
        fn = compose_sequential if variant.algorithm == "sequential" else compose_parallel
        call: Callable[[], Itinerary] = lambda: fn(net, swarm, request, perf, pc)
    elif variant.algorithm == "dijkstra":
        call = lambda: dijkstra_baseline(net, swarm, request, perf)
    elif variant.algorithm == "brute_force":
        call = lambda: brute_force_oracle(net, swarm, request, perf, config.path_budget)
    else:
        raise InvalidParameter(f"unknown algorithm {variant.algorithm!r}")
    best = None
    for _ in range(config.timing_repeats):
        start = time.perf_counter_ns()
        it = call()
        elapsed = time.perf_counter_ns() - start
        best = elapsed if best is None else min(best, elapsed)
    return it, best // 1000


def run_experiment(config: ExperimentConfig, out_dir: str | os.PathLike | None = None,
                   net: SkywayNetwork | None = None,
                   requests: Sequence[DeliveryRequest] | None = None,
                   keep_itineraries: bool = False) -> list[ResultRow]:
    """Every request under every variant.  Planner errors mark the row failed.

    With ``out_dir`` the raw rows go to ``results.csv`` and the per-hop means
    to ``summary.csv``.  Without ``config.timing`` ``plan_us`` is written as 0
    so repeated runs produce identical files.
    """
    net = config.network.build() if net is None else net
    if requests is None:
        requests = generate_requests(net, config.request_count, config.request_seed, config.max_packages,
                                     config.max_weight_kg, config.min_packages)
    variants = config.variants()
    rows = []
    for rid, req in enumerate(requests):
        hops = len(shortest_path(net, req.source, req.destination)[0])
        for v in variants:
            try:
                it, us = run_variant(net, req, v, config)
            except SkyswarmError as e:
                rows.append(ResultRow(rid, v, hops, status=type(e).__name__))
                continue
            rows.append(ResultRow(rid, v, hops, it.total_delivery_minutes, it.travel_minutes, it.charge_minutes,
                                  it.wait_minutes, it.arrival_spread_minutes, us if config.timing else 0, "ok",
                                  it if keep_itineraries else None))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "results.csv"), "w", newline="") as f:
            f.write(raw_csv(rows))
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
            f.write(summary_csv(rows, variants))
    return rows


def raw_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_COLUMNS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def summarize(rows: Sequence[ResultRow], variants: Sequence[Variant] | None = None) -> list[dict]:
    """Per (variant, hop bucket): row count, failures, and means over successful rows."""
    if variants is None:
        variants = list(dict.fromkeys(r.variant for r in rows))
    order = {v: k for k, v in enumerate(variants)}
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((order[r.variant], r.hops), []).append(r)
    out = []
    for (k, hops), group in sorted(groups.items()):
        good = [r for r in group if r.ok]
        entry = {"variant": variants[k], "hops": hops, "n": len(group), "failed": len(group) - len(good)}
        for m in METRICS:
            entry[m] = sum(getattr(r, m) for r in good) / len(good) if good else float("nan")
        out.append(entry)
    return out


def summary_csv(rows: Sequence[ResultRow], variants: Sequence[Variant] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for e in summarize(rows, variants):
        v = e["variant"]
        w.writerow([v.algorithm, _blank(v.lookahead), _blank(v.max_splits), _blank(v.cooperative), e["hops"], e["n"],
                    e["failed"]] + [_num(e[m]) for m in METRICS])
    return buf.getvalue()


def mean_total(rows: Sequence[ResultRow], variant: Variant, request_ids=None) -> float:
    """Mean total over successful rows of ``variant`` (optionally restricted to ``request_ids``)."""
    vals = [r.total_min for r in rows if r.variant == variant and r.ok
            and (request_ids is None or r.request_id in request_ids)]
    if not vals:
        raise InvalidParameter(f"no successful rows for {variant.label}")
    return sum(vals) / len(vals)


def config_to_json(config: ExperimentConfig) -> dict:
    net = asdict(config.network)
    if net["file"] is None:
        del net["file"]
    return {
        "network": net,
        "drone": asdict(config.drone),
        "requests": {"count": config.request_count, "seed": config.request_seed,
                     "max_packages": config.max_packages, "min_packages": config.min_packages,
                     "max_weight_kg": config.max_weight_kg},
        "planners": {"lookaheads": list(config.lookaheads), "max_splits": list(config.max_splits),
                     "cooperative": list(config.cooperative), "sequential": config.sequential,
                     "parallel": config.parallel, "arrival_window_minutes": config.arrival_window_minutes},
        "baselines": {"dijkstra": config.dijkstra, "brute_force": config.brute_force,
                      "path_budget": config.path_budget},
        "timing": config.timing,
        "timing_repeats": config.timing_repeats,
    }
