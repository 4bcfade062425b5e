"""Sequential and parallel swarm composition.

Both planners are greedy lookahead searches.  At every node the destination
is tried first; if some drone cannot make it, the planner scores nearby
recharging stations by ``travel time + charging time + waiting time`` and
moves to the best one.  The sequential planner keeps the swarm together.  The
parallel planner lets part of the swarm fly on while the rest recharges, and
may disband a swarm across several stations so that more pads charge at
once.

Every candidate path must avoid nodes the (sub-)swarm has already flown
through.  When that leaves nothing feasible, revisits are allowed but only
towards stations strictly closer to the destination, which guarantees
termination.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .energy import (
    ChargeDemand,
    DronePerformance,
    can_reach,
    charge_duration,
    cooperative_targets,
    drain,
    rounds_total,
)
from .errors import InvalidParameter, NoFeasibleCandidate
from .itinerary import Itinerary, Track, assemble
from .network import Path, SkywayNetwork, neighbors_within_lookahead, reaches, shortest_paths_from
from .swarm import DEFAULT_PARTITION_LIMIT, MIN_SUBSWARM, DeliveryRequest, Drone, SubSwarm, enumerate_partitions


@dataclass(frozen=True)
class PlannerConfig:
    lookahead: int = 2
    max_splits: int = 2
    arrival_window_minutes: float = 15.0
    cooperative: bool = False
    partition_limit: int = DEFAULT_PARTITION_LIMIT

    def __post_init__(self):
        if isinstance(self.lookahead, bool) or not isinstance(self.lookahead, int) or self.lookahead < 0:
            raise InvalidParameter("lookahead must be a non-negative integer")
        if isinstance(self.max_splits, bool) or not isinstance(self.max_splits, int) or self.max_splits < 1:
            raise InvalidParameter("max_splits must be a positive integer")
        if not self.arrival_window_minutes >= 0:
            raise InvalidParameter("arrival window must be non-negative")


@dataclass
class Decision:
    """One planning step, as reported to an observer.

    ``action`` is ``direct`` (fly to the destination), ``stop`` (whole
    (sub-)swarm to one station), ``partial-direct`` (a reaching subset leaves
    for the destination) or ``split`` (disband across stations).
    """

    step: int
    subswarm: int
    node: int
    clock: float
    active: tuple[int, ...]
    action: str
    targets: tuple[int, ...]
    parts: tuple[tuple[int, ...], ...]
    scores: dict = field(default_factory=dict)
    fallback: bool = False


Observer = Callable[[Decision], None]


@dataclass(frozen=True)
class _Option:
    target: int
    km: float
    path: Path
    score: float = 0.0


class _Context:
    """Per-request caches.  Nothing is shared between planning calls."""

    def __init__(self, net: SkywayNetwork, request: DeliveryRequest, perf: DronePerformance, config: PlannerConfig):
        net.check_node(request.source)
        net.check_node(request.destination)
        self.net = net
        self.perf = perf
        self.config = config
        self.dest = request.destination
        self.payloads = dict(enumerate(request.package_weights_kg))
        self._views: dict[tuple, dict] = {}
        self._to_dest = None
        self._leg_estimate: dict[int, float] = {}

    def view(self, node: int, route) -> dict:
        """Shortest paths from ``node`` with the rest of ``route`` removed from the graph."""
        blocked = frozenset(route) - {node}
        got = self._views.get((node, blocked))
        if got is None:
            got = self._views[(node, blocked)] = shortest_paths_from(self.net, node, blocked)
        return got

    def to_dest(self, node: int) -> float:
        if self._to_dest is None:
            self._to_dest = self.view(self.dest, ())
        return self._to_dest[node][0]

    def all_reach(self, batteries: dict[int, float], ids, km: float) -> bool:
        return all(can_reach(self.perf, batteries[i], self.payloads[i], km) for i in ids)

    def direct(self, node: int, route, fallback: bool) -> _Option | None:
        got = self.view(node, () if fallback else route).get(self.dest)
        return None if got is None else _Option(self.dest, got[0], got[1])

    def candidates(self, node: int, route, *, fallback: bool) -> list[tuple[int, float, Path]]:
        """Lookahead stations reachable from ``node`` by a path that does not pass the destination.

        Normally the search runs on the graph without the nodes already in
        ``route``, and a station only counts if the destination is still
        reachable from it afterwards.  With ``fallback`` the whole graph is
        used, but only stations strictly closer to the destination count.
        """
        blocked = frozenset(route) - {node}
        dmap = self.view(node, () if fallback else route)
        out = []
        levels = neighbors_within_lookahead(self.net, node, self.config.lookahead, dmap,
                                            () if fallback else blocked)
        for c, km in levels.items():
            if c == self.dest:
                continue
            path = dmap[c][1]
            if self.dest in path:
                continue
            if fallback:
                if not self.to_dest(c) < self.to_dest(node):
                    continue
            elif not reaches(self.net, c, self.dest, set(blocked) | set(path[:-1])):
                continue
            out.append((c, km, path))
        return out

    def arrival_demands(self, batteries, ids, km: float, target: int, cooperative: bool):
        arrive = [(drain(self.perf, batteries[i], self.payloads[i], km), self.payloads[i]) for i in ids]
        if cooperative:
            return cooperative_targets(self.perf, arrive, self.net.pads[target], self.leg_estimate(target), ids=ids)
        return [ChargeDemand(i, b, 100.0) for i, (b, _) in zip(ids, arrive)]

    def leg_estimate(self, node: int) -> float:
        """Length of the leg a freshly charged swarm would fly next from ``node``.

        Used to size cooperative charges at stations that are only being
        scored.  Judged with full-charge scoring and no route memory.
        """
        got = self._leg_estimate.get(node)
        if got is None:
            full = {i: 100.0 for i in self.payloads}
            try:
                got = choose_next(self, node, full, tuple(self.payloads), [node], cooperative=False).km
            except NoFeasibleCandidate:
                got = math.inf
            self._leg_estimate[node] = got
        return got


def choose_next(ctx: _Context, node: int, batteries: dict[int, float], ids, route, *,
                cooperative: bool, scores: dict | None = None) -> _Option:
    """Next hop for a swarm that stays together: the destination if every
    drone can make it, else the best-scoring reachable lookahead station."""
    for fallback in (False, True):
        direct = ctx.direct(node, route, fallback)
        if direct is not None and ctx.all_reach(batteries, ids, direct.km):
            if fallback and scores is not None:
                scores["fallback"] = True
            return direct
        best = None
        for c, km, path in ctx.candidates(node, route, fallback=fallback):
            if not ctx.all_reach(batteries, ids, km):
                continue
            demands = ctx.arrival_demands(batteries, ids, km, c, cooperative)
            total, _, _ = rounds_total([charge_duration(ctx.perf, d) for d in demands], ctx.net.pads[c])
            score = ctx.perf.travel_minutes(km) + total
            if scores is not None:
                scores[c] = score
            key = (score, ctx.to_dest(c), c)
            if best is None or key < best[0]:
                best = (key, _Option(c, km, path, score))
        if best is not None:
            if fallback and scores is not None:
                scores["fallback"] = True
            return best[1]
    raise NoFeasibleCandidate(f"no station reachable from node {node} by every drone")


def _step_limit(net: SkywayNetwork, drones: int) -> int:
    # normal steps never revisit a node and fallback steps approach the destination
    return net.node_count ** 2 * max(drones, 1) + 16


def _emit(observer, decision):
    if observer is not None:
        observer(decision)


def compose_sequential(net: SkywayNetwork, swarm: SubSwarm, request: DeliveryRequest, perf: DronePerformance,
                       config: PlannerConfig = PlannerConfig(), observer: Observer | None = None) -> Itinerary:
    """Plan the whole swarm along one node sequence.

    With ``config.cooperative`` and more drones than pads at a stop, drones
    charge only for the next hop, which is fixed at that moment as the hop a
    fully charged swarm would choose.
    """
    ctx = _Context(net, request, perf, config)
    if swarm.current_node != request.source:
        raise InvalidParameter("swarm must start at the request source")
    ids = swarm.ids
    track = Track(0, {i: ctx.payloads[i] for i in ids}, {d.id: d.battery_percent for d in swarm.drones},
                  swarm.current_node, swarm.clock_minutes, perf)
    committed: _Option | None = None
    full = {i: 100.0 for i in ids}
    for step in range(_step_limit(net, len(ids))):
        scores: dict = {}
        option = committed or choose_next(ctx, track.node, track.batteries, ids, track.route,
                                          cooperative=config.cooperative, scores=scores)
        _emit(observer, Decision(step, 0, track.node, track.clock, (0,),
                                 "direct" if option.target == ctx.dest else "stop",
                                 (option.target,), (ids,), scores, bool(scores.pop("fallback", False))))
        track.fly(net, option.path)
        if option.target == ctx.dest:
            track.arrival = track.clock
            return assemble(request, [track], config.arrival_window_minutes)
        pads = net.pads[track.node]
        if config.cooperative and len(ids) > pads:
            committed = choose_next(ctx, track.node, full, ids, track.route, cooperative=True)
            drones = [(track.batteries[i], ctx.payloads[i]) for i in ids]
            demands = cooperative_targets(perf, drones, pads, committed.km, ids=ids)
        else:
            committed = None
            demands = track.full_charge_demands()
        track.charge(demands, pads)
    raise NoFeasibleCandidate("step limit reached without arriving")


# ---------------------------------------------------------------------------
# Parallel composition


@dataclass
class _Split:
    key: tuple
    parts: tuple[tuple[int, ...], ...]
    options: tuple[_Option, ...]


def _best_split(ctx: _Context, track: Track, scores: dict | None, fallback: bool) -> _Split | None:
    """Partition of the sub-swarm and distinct stations per part minimising
    (slowest part, summed part times, station ids)."""
    perf, net = ctx.perf, ctx.net
    swarm = SubSwarm(tuple(_drone_view(track, i) for i in track.ids), track.node, track.clock)
    cands = ctx.candidates(track.node, track.route, fallback=fallback)
    if not cands:
        return None
    partitions = enumerate_partitions(swarm, ctx.config.max_splits, ctx.config.partition_limit)
    # per station: travel minutes and per-drone full-charge duration (None if unreachable)
    info = []
    for c, km, path in cands:
        durs = {}
        for i in track.ids:
            if can_reach(perf, track.batteries[i], track.payloads[i], km):
                durs[i] = (100.0 - drain(perf, track.batteries[i], track.payloads[i], km)) / 100.0 \
                    * perf.full_charge_min
        info.append((_Option(c, km, path), perf.travel_minutes(km), durs, net.pads[c]))

    part_costs: dict[tuple[int, ...], list[tuple[float, int]]] = {}

    def costs_for(part):
        got = part_costs.get(part)
        if got is None:
            got = []
            for k, (_, travel, durs, pads) in enumerate(info):
                if all(i in durs for i in part):
                    total, _, _ = rounds_total([durs[i] for i in part], pads)
                    got.append((travel + total, k))
            got.sort()
            part_costs[part] = got
        return got

    best: _Split | None = None
    for partition in partitions:
        parts = partition.parts
        lists = [costs_for(p) for p in parts]
        if any(not lst for lst in lists):
            continue
        lb_max = max(lst[0][0] for lst in lists)
        if best is not None:
            lb_sum = sum(lst[0][0] for lst in lists)
            if lb_max > best.key[0] or (lb_max == best.key[0] and lb_sum > best.key[1]):
                continue
        found = _assign(lists, best.key if best else None)
        if found is not None:
            key, picks = found
            best = _Split(key, parts, tuple(info[k][0] for k in picks))
            if scores is not None:
                scores[(parts, tuple(info[k][0].target for k in picks))] = key[0]
    return best


def _assign(lists, bound):
    """Distinct station per part, lexicographically minimal (max, sum, ids); ``None`` if not better than ``bound``."""
    n = len(lists)
    best = [bound, None]
    chosen: list[int] = []
    rest_min = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        rest_min[j] = rest_min[j + 1] + lists[j][0][0]
    rest_max = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        rest_max[j] = max(rest_max[j + 1], lists[j][0][0])

    def rec(j, cur_max, cur_sum, used):
        if j == n:
            key = (cur_max, cur_sum, tuple(chosen))
            if best[0] is None or key < best[0]:
                best[0] = key
                best[1] = list(chosen)
            return
        for cost, k in lists[j]:
            if k in used:
                continue
            m = max(cur_max, cost, rest_max[j + 1])
            s = cur_sum + cost + rest_min[j + 1]
            if best[0] is not None and (m > best[0][0] or (m == best[0][0] and s > best[0][1])):
                if cost > best[0][0]:
                    break
                continue
            used.add(k)
            chosen.append(k)
            rec(j + 1, max(cur_max, cost), cur_sum + cost, used)
            chosen.pop()
            used.discard(k)

    rec(0, 0.0, 0.0, set())
    if best[1] is None:
        return None
    return best[0], best[1]


def _drone_view(track: Track, i: int) -> Drone:
    return Drone(i, track.batteries[i], track.payloads[i])


def _parallel_step(ctx: _Context, t: Track, step: int, active, next_id: int, fallback: bool,
                   observer) -> list[Track] | None:
    """Advance ``t`` by one decision.  Returns the newly spawned tracks
    (empty if ``t`` itself moved) or ``None`` if nothing is feasible."""
    net, perf = ctx.net, ctx.perf
    direct = ctx.direct(t.node, t.route, fallback)
    reach = [] if direct is None else [i for i in t.ids if can_reach(perf, t.batteries[i], t.payloads[i], direct.km)]

    if direct is not None and len(reach) == len(t):
        _emit(observer, Decision(step, t.id, t.node, t.clock, active, "direct", (ctx.dest,), (t.ids,),
                                 fallback=fallback))
        t.fly(net, direct.path)
        t.arrival = t.clock
        return []

    go_count = min(len(reach), len(t) - MIN_SUBSWARM)
    if go_count >= MIN_SUBSWARM:
        go_ids = sorted(sorted(reach, key=lambda i: (-t.payloads[i], i))[:go_count])
        stay_ids = [i for i in t.ids if i not in go_ids]
        go, stay = t.spawn(next_id, go_ids), t.spawn(next_id + 1, stay_ids)
        _emit(observer, Decision(step, t.id, t.node, t.clock, active, "partial-direct",
                                 (ctx.dest, t.node), (tuple(go_ids), tuple(stay_ids)), fallback=fallback))
        go.fly(net, direct.path)
        go.arrival = go.clock
        return [go, stay]

    scores: dict = {}
    split = _best_split(ctx, t, scores if observer else None, fallback)
    if split is None:
        return None
    single = len(split.parts) == 1
    _emit(observer, Decision(step, t.id, t.node, t.clock, active, "stop" if single else "split",
                             tuple(o.target for o in split.options), split.parts, scores, fallback))
    movers = [t] if single else [t.spawn(next_id + k, part) for k, part in enumerate(split.parts)]
    for mover, option in zip(movers, split.options):
        mover.fly(net, option.path)
        mover.charge(mover.full_charge_demands(), net.pads[mover.node])
    return [] if single else movers


def compose_parallel(net: SkywayNetwork, swarm: SubSwarm, request: DeliveryRequest, perf: DronePerformance,
                     config: PlannerConfig = PlannerConfig(), observer: Observer | None = None) -> Itinerary:
    """Plan with banding and disbanding sub-swarms.

    Each active sub-swarm is advanced until it lands:

    * every drone reaches the destination: fly there;
    * some do, and both they and the rest number at least two: the largest
      such group of reachers (heaviest first) flies to the destination, the
      rest stay to be re-planned;
    * otherwise: choose a partition into at most ``max_splits`` parts of two
      or more drones, each sent to its own lookahead station and charged to
      full there, minimising the slowest part's travel plus node time.

    Finally the arrival window is enforced.
    """
    if config.cooperative:
        raise InvalidParameter("cooperative charging is modelled for sequential composition only")
    ctx = _Context(net, request, perf, config)
    if swarm.current_node != request.source:
        raise InvalidParameter("swarm must start at the request source")
    root = Track(0, {d.id: ctx.payloads[d.id] for d in swarm.drones}, {d.id: d.battery_percent for d in swarm.drones},
                 swarm.current_node, swarm.clock_minutes, perf)
    tracks = [root]
    queue = deque([root])
    next_id = 1
    step = 0
    limit = _step_limit(net, len(swarm))
    while queue:
        t = queue.popleft()
        if step >= limit:
            raise NoFeasibleCandidate("step limit reached without arriving")
        step += 1
        active = tuple(sorted([t.id] + [q.id for q in queue]))
        for fallback in (False, True):
            spawned = _parallel_step(ctx, t, step - 1, active, next_id, fallback, observer)
            if spawned is not None:
                break
        else:
            raise NoFeasibleCandidate(f"no feasible move for sub-swarm {t.id} at node {t.node}")
        tracks += spawned
        next_id += len(spawned)
        for mover in reversed(spawned or [t]):
            if mover.arrival is None:
                queue.appendleft(mover)
    return assemble(request, tracks, config.arrival_window_minutes)
