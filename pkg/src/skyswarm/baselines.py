"""Reference planners: a cost-weighted Dijkstra and an exhaustive per-path search."""

from __future__ import annotations

import heapq
import math
from typing import Sequence

from .energy import ChargeDemand, DronePerformance, can_reach, charge_duration, drain, rounds_total
from .errors import NoFeasiblePath, PathBudgetExceeded
from .itinerary import Itinerary, Track, assemble
from .network import Path, SkywayNetwork, iter_simple_paths
from .swarm import DeliveryRequest, SubSwarm

DEFAULT_PATH_BUDGET = 20_000


def _start_track(swarm: SubSwarm, request: DeliveryRequest, perf: DronePerformance) -> Track:
    payloads = {d.id: request.package_weights_kg[d.id] for d in swarm.drones}
    return Track(0, payloads, {d.id: d.battery_percent for d in swarm.drones}, swarm.current_node,
                 swarm.clock_minutes, perf)


def _replay(net, swarm, request, perf, path: Path, stops: Sequence[int]) -> Itinerary:
    """Fly ``path``, recharging to full at each node listed in ``stops``."""
    track = _start_track(swarm, request, perf)
    stop_set = set(stops)
    seg = [path[0]]
    for node in path[1:]:
        seg.append(node)
        if node in stop_set:
            track.fly(net, seg)
            track.charge(track.full_charge_demands(), net.pads[node])
            seg = [node]
    track.fly(net, seg)
    track.arrival = track.clock
    return assemble(request, [track], None)


def edge_costs(net: SkywayNetwork, payloads: Sequence[float], perf: DronePerformance,
               destination: int) -> dict[tuple[int, int], float]:
    """Delivery cost per directed segment: travel plus the node time to top
    every drone back up to full at the head node (nothing at the destination).

    Segments some drone cannot fly on a full battery are left out.
    """
    costs = {}
    for a, b, km in net.edges:
        if not all(can_reach(perf, 100.0, p, km) for p in payloads):
            continue
        travel = perf.travel_minutes(km)
        durations = [charge_duration(perf, ChargeDemand(0, drain(perf, 100.0, p, km), 100.0)) for p in payloads]
        for u, v in ((a, b), (b, a)):
            node_total = 0.0 if v == destination else rounds_total(durations, net.pads[v])[0]
            costs[(u, v)] = travel + node_total
    return costs


def dijkstra_baseline(net: SkywayNetwork, swarm: SubSwarm, request: DeliveryRequest,
                      perf: DronePerformance) -> Itinerary:
    """Least-cost path under :func:`edge_costs`, replayed with a full recharge at every intermediate node."""
    src, dest = request.source, request.destination
    net.check_node(src)
    net.check_node(dest)
    payloads = [request.package_weights_kg[d.id] for d in swarm.drones]
    costs = edge_costs(net, payloads, perf, dest)
    adj: dict[int, list[tuple[int, float]]] = {}
    for (u, v), w in sorted(costs.items()):
        adj.setdefault(u, []).append((v, w))
    done = {}
    heap = [(0.0, (src,))]
    best = {src: (0.0, (src,))}
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done[u] = (d, path)
        if u == dest:
            break
        for v, w in adj.get(u, ()):
            cand = (d + w, path + (v,))
            if v not in done and (v not in best or cand < best[v]):
                best[v] = cand
                heapq.heappush(heap, cand)
    if dest not in done:
        raise NoFeasiblePath(f"no path from {src} to {dest} whose segments every drone can fly")
    path = done[dest][1]
    return _replay(net, swarm, request, perf, path, path[1:-1])


def best_stops_on_path(net: SkywayNetwork, payloads: dict[int, float], perf: DronePerformance,
                       path: Path, bound: float = math.inf, start_batteries: dict[int, float] | None = None,
                       start_clock: float = 0.0) -> tuple[float, tuple[int, ...]] | None:
    """Fastest way to fly a fixed path when every stop recharges to full.

    Dynamic programme over the last stop before each node; the arithmetic is
    done in the same order as :class:`Track` so that replaying the returned
    stops reproduces the returned time exactly.  ``None`` if some segment is
    longer than a full battery allows, or if nothing beats ``bound``
    strictly.
    """
    m = len(path) - 1
    ids = sorted(payloads)
    # best[j] = (time, previous stop index); index 0 is the source, m the destination
    best = [(math.inf, -1)] * (m + 1)
    best[0] = (start_clock, -1)
    initial = {k: 100.0 for k in ids} if start_batteries is None else start_batteries
    for i in range(m):
        t = best[i][0]
        if t == math.inf:
            continue
        km_total = 0.0
        batt = dict(initial) if i == 0 else {k: 100.0 for k in ids}
        full = dict(batt)
        for j in range(i + 1, m + 1):
            km = net.distance(path[j - 1], path[j])
            km_total += km
            if not all(can_reach(perf, full[k], payloads[k], km_total) for k in ids):
                break
            t += perf.travel_minutes(km)
            if t >= bound:
                break
            for k in ids:
                batt[k] = drain(perf, batt[k], payloads[k], km)
            arrive = t
            if j < m:
                durations = [charge_duration(perf, ChargeDemand(k, batt[k], 100.0)) for k in ids]
                total, longest, _ = rounds_total(durations, net.pads[path[j]])
                arrive += longest
                wt = total - longest
                if wt > 0:
                    arrive += wt
            if arrive < best[j][0]:
                best[j] = (arrive, i)
    arrival, arrival_prev = best[m]
    if not arrival < bound:
        return None
    stops = []
    i = arrival_prev
    while i > 0:
        stops.append(path[i])
        i = best[i][1]
    return arrival, tuple(reversed(stops))


def brute_force_oracle(net: SkywayNetwork, swarm: SubSwarm, request: DeliveryRequest, perf: DronePerformance,
                       max_paths: int = DEFAULT_PATH_BUDGET) -> Itinerary:
    """Best itinerary over every simple path and every choice of stops along it.

    Refuses (:class:`PathBudgetExceeded`) rather than answer from a truncated
    path set.  Ties keep the lexicographically first path.
    """
    payloads = {d.id: request.package_weights_kg[d.id] for d in swarm.drones}
    batteries = {d.id: d.battery_percent for d in swarm.drones}
    best = None
    seen = []
    for path in iter_simple_paths(net, request.source, request.destination):
        if len(seen) == max_paths:
            raise PathBudgetExceeded(seen, max_paths)
        seen.append(path)
        got = best_stops_on_path(net, payloads, perf, path, math.inf if best is None else best[0],
                                 batteries, swarm.clock_minutes)
        if got is not None:
            best = (got[0], path, got[1])
    if best is None:
        raise NoFeasiblePath(f"no simple path from {request.source} to {request.destination} can be flown")
    return _replay(net, swarm, request, perf, best[1], best[2])
