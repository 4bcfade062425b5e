"""Timed itineraries: legs per sub-swarm, the arrival-window pass, JSON, and re-simulation.

A sub-swarm's legs are contiguous in time.  A sub-swarm created by a split
starts where and when its parent's legs end, with the parent's battery state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .energy import (
    BATTERY_EPS,
    ChargeDemand,
    DronePerformance,
    charge_duration,
    drain,
    rounds_total,
)
from .errors import ParseError
from .network import SkywayNetwork
from .swarm import MIN_SUBSWARM, DeliveryRequest

TRAVEL, CHARGE, WAIT = "travel", "charge", "wait"
KINDS = (TRAVEL, CHARGE, WAIT)


@dataclass(frozen=True)
class Leg:
    subswarm_id: int
    kind: str
    from_node: int
    to_node: int
    start_minutes: float
    duration_minutes: float
    charges: tuple[ChargeDemand, ...] = ()

    @property
    def end_minutes(self) -> float:
        return self.start_minutes + self.duration_minutes


@dataclass(frozen=True)
class SubSwarmRecord:
    id: int
    drone_ids: tuple[int, ...]
    parent: int | None


@dataclass
class Itinerary:
    request: DeliveryRequest
    legs: list[Leg]
    subswarms: list[SubSwarmRecord]
    total_delivery_minutes: float
    arrival_spread_minutes: float
    travel_minutes: float
    charge_minutes: float
    wait_minutes: float
    arrivals: dict[int, float] = field(default_factory=dict)

    def legs_of(self, subswarm_id: int) -> list[Leg]:
        return [leg for leg in self.legs if leg.subswarm_id == subswarm_id]

    def stops(self, subswarm_id: int) -> list[int]:
        return [leg.from_node for leg in self.legs_of(subswarm_id) if leg.kind == CHARGE]

    def node_sequence(self, subswarm_id: int) -> list[int]:
        """Nodes flown through by a sub-swarm's own travel legs."""
        seq = []
        for leg in self.legs_of(subswarm_id):
            if leg.kind == TRAVEL:
                if not seq:
                    seq.append(leg.from_node)
                seq.append(leg.to_node)
        return seq


class Track:
    """Mutable timeline of one sub-swarm while a planner builds it."""

    def __init__(self, tid: int, payloads: dict[int, float], batteries: dict[int, float], node: int,
                 clock: float, perf: DronePerformance, parent: int | None = None, route: Sequence[int] = ()):
        self.id = tid
        self.payloads = payloads
        self.batteries = dict(batteries)
        self.node = node
        self.clock = clock
        self.perf = perf
        self.parent = parent
        self.route = list(route) or [node]
        self.legs: list[Leg] = []
        self.arrival: float | None = None

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.payloads))

    def __len__(self):
        return len(self.payloads)

    def fly(self, net: SkywayNetwork, path: Sequence[int]) -> None:
        if path[0] != self.node:
            raise ValueError(f"path starts at {path[0]}, sub-swarm is at {self.node}")
        for a, b in zip(path, path[1:]):
            km = net.distance(a, b)
            dur = self.perf.travel_minutes(km)
            self.legs.append(Leg(self.id, TRAVEL, a, b, self.clock, dur))
            self.clock += dur
            for i in self.batteries:
                self.batteries[i] = drain(self.perf, self.batteries[i], self.payloads[i], km)
            self.route.append(b)
        self.node = path[-1]

    def charge(self, demands: Sequence[ChargeDemand], pads: int) -> None:
        durations = [charge_duration(self.perf, d) for d in demands]
        total, longest, _ = rounds_total(durations, pads)
        self.legs.append(Leg(self.id, CHARGE, self.node, self.node, self.clock, longest, tuple(demands)))
        self.clock += longest
        wt = total - longest
        if wt > 0:
            self.legs.append(Leg(self.id, WAIT, self.node, self.node, self.clock, wt))
            self.clock += wt
        for d in demands:
            self.batteries[d.drone_id] = d.to_percent

    def full_charge_demands(self) -> list[ChargeDemand]:
        return [ChargeDemand(i, self.batteries[i], 100.0) for i in self.ids]

    def spawn(self, tid: int, ids) -> Track:
        ids = set(ids)
        return Track(tid, {i: p for i, p in self.payloads.items() if i in ids},
                     {i: b for i, b in self.batteries.items() if i in ids},
                     self.node, self.clock, self.perf, parent=self.id, route=self.route)


def assemble(request: DeliveryRequest, tracks: Sequence[Track], window_minutes: float | None) -> Itinerary:
    """Apply the arrival-window rule and total everything up.

    Early sub-swarms whose lead exceeds the window first hold at the node
    their final flight leaves from, so that they land exactly ``window``
    before the last one.  Every early sub-swarm then waits at the destination
    for the last arrival.
    """
    dest = request.destination
    by_id = {t.id: t for t in tracks}
    leaves = [t for t in tracks if t.arrival is not None]
    last = max(t.arrival for t in leaves)
    legs_by_id = {t.id: list(t.legs) for t in tracks}
    arrivals = {}
    for t in leaves:
        legs = legs_by_id[t.id]
        arrival = t.arrival
        if window_minutes is not None and last - arrival > window_minutes:
            delay = (last - window_minutes) - arrival
            k = len(legs)
            while k > 0 and legs[k - 1].kind == TRAVEL:
                k -= 1
            hold_at = legs[k].from_node
            start = legs[k].start_minutes
            while True:
                shifted = [replace(leg, start_minutes=leg.start_minutes + delay) for leg in legs[k:]]
                arrival = shifted[-1].end_minutes
                if last - arrival <= window_minutes:
                    break
                # shifted starts can round a few ulps short of the target
                delay = math.nextafter(delay, math.inf)
            legs[k:] = [Leg(t.id, WAIT, hold_at, hold_at, start, delay)] + shifted
        arrivals[t.id] = arrival
        if arrival < last:
            legs.append(Leg(t.id, WAIT, dest, dest, arrival, last - arrival))

    last_id = min(tid for tid, a in arrivals.items() if a == last)
    lineage = []
    cur = by_id[last_id]
    while cur is not None:
        lineage.append(cur.id)
        cur = by_id.get(cur.parent) if cur.parent is not None else None
    comp = {TRAVEL: 0.0, CHARGE: 0.0, WAIT: 0.0}
    for tid in reversed(lineage):
        for leg in legs_by_id[tid]:
            comp[leg.kind] += leg.duration_minutes

    all_legs = [leg for t in sorted(tracks, key=lambda t: t.id) for leg in legs_by_id[t.id]]
    records = [SubSwarmRecord(t.id, t.ids, t.parent) for t in sorted(tracks, key=lambda t: t.id)]
    spread = last - min(arrivals.values())
    return Itinerary(request, all_legs, records, last, spread, comp[TRAVEL], comp[CHARGE], comp[WAIT], arrivals)


# ---------------------------------------------------------------------------
# JSON


def itinerary_to_json(it: Itinerary) -> dict:
    legs = []
    for leg in it.legs:
        row = {"subswarm": leg.subswarm_id, "kind": leg.kind, "from": leg.from_node, "to": leg.to_node,
               "start_min": leg.start_minutes, "dur_min": leg.duration_minutes}
        if leg.charges:
            row["charges"] = [{"drone": d.drone_id, "from_pct": d.from_percent, "to_pct": d.to_percent}
                              for d in leg.charges]
        legs.append(row)
    return {
        "request": it.request.to_json(),
        "subswarms": [{"id": s.id, "drones": list(s.drone_ids), "parent": s.parent} for s in it.subswarms],
        "legs": legs,
        "total_min": it.total_delivery_minutes,
        "travel_min": it.travel_minutes,
        "charge_min": it.charge_minutes,
        "wait_min": it.wait_minutes,
        "spread_min": it.arrival_spread_minutes,
        "arrivals": {str(k): v for k, v in sorted(it.arrivals.items())},
    }


def itinerary_from_json(doc: dict) -> Itinerary:
    try:
        request = DeliveryRequest.from_json(doc["request"])
        subs = [SubSwarmRecord(int(s["id"]), tuple(s["drones"]), s["parent"]) for s in doc["subswarms"]]
        legs = []
        for i, row in enumerate(doc["legs"]):
            if row["kind"] not in KINDS:
                raise ParseError(f"unknown leg kind {row['kind']!r}", field=f"legs[{i}].kind")
            charges = tuple(ChargeDemand(int(c["drone"]), float(c["from_pct"]), float(c["to_pct"]))
                            for c in row.get("charges", ()))
            legs.append(Leg(int(row["subswarm"]), row["kind"], int(row["from"]), int(row["to"]),
                            float(row["start_min"]), float(row["dur_min"]), charges))
        return Itinerary(request, legs, subs, float(doc["total_min"]), float(doc["spread_min"]),
                         float(doc["travel_min"]), float(doc["charge_min"]), float(doc["wait_min"]),
                         {int(k): float(v) for k, v in doc.get("arrivals", {}).items()})
    except KeyError as exc:
        raise ParseError("missing key", field=str(exc.args[0])) from None
    except ParseError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def dumps_itinerary(it: Itinerary) -> str:
    return json.dumps(itinerary_to_json(it), indent=1)


# ---------------------------------------------------------------------------
# Re-simulation


def _close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def validate_itinerary(it: Itinerary, net: SkywayNetwork, perf: DronePerformance,
                       window_minutes: float | None = None) -> list[tuple[str, str]]:
    """Replay every leg against the network and energy model.

    Returns ``(invariant, message)`` pairs; an empty list means the itinerary
    is consistent.  Invariant names: ``battery``, ``timing``, ``edge``,
    ``charging``, ``continuity``, ``subswarm-size``, ``conservation``,
    ``window``, ``totals``.
    """
    out: list[tuple[str, str]] = []
    req = it.request
    payload = dict(enumerate(req.package_weights_kg))
    subs = {s.id: s for s in it.subswarms}
    children: dict[int | None, list[int]] = {}
    for s in it.subswarms:
        children.setdefault(s.parent, []).append(s.id)

    roots = children.get(None, [])
    if len(roots) != 1:
        return [("conservation", f"expected one root sub-swarm, found {len(roots)}")]
    if sorted(subs[roots[0]].drone_ids) != sorted(payload):
        out.append(("conservation", "root sub-swarm does not carry exactly the requested packages"))
    for s in it.subswarms:
        if len(s.drone_ids) < MIN_SUBSWARM:
            out.append(("subswarm-size", f"sub-swarm {s.id} has {len(s.drone_ids)} drones"))
        kids = children.get(s.id, [])
        if kids:
            merged = sorted(i for k in kids for i in subs[k].drone_ids)
            if merged != sorted(s.drone_ids):
                out.append(("conservation", f"children of sub-swarm {s.id} do not partition its drones"))

    arrivals: dict[int, float] = {}
    # (node, clock, batteries) each sub-swarm starts from
    start = {roots[0]: (req.source, 0.0, {i: 100.0 for i in payload})}
    order = [roots[0]]
    for sid in order:
        node, clock, batt = start[sid]
        batt = {i: batt[i] for i in subs[sid].drone_ids if i in batt}
        arrived = None
        pending_wait = None
        for leg in it.legs_of(sid):
            if pending_wait is not None:
                if leg.kind != WAIT or not _close(leg.duration_minutes, pending_wait):
                    out.append(("charging", f"sub-swarm {sid} should wait {pending_wait} min for pads at {node}"))
                pending_wait = None
            if not _close(leg.start_minutes, clock):
                out.append(("timing", f"sub-swarm {sid} leg at {leg.start_minutes} does not start at {clock}"))
            if leg.duration_minutes < 0:
                out.append(("timing", f"negative duration in sub-swarm {sid}"))
            if leg.from_node != node:
                out.append(("continuity", f"sub-swarm {sid} leg leaves {leg.from_node} but is at {node}"))
            if leg.kind == TRAVEL:
                if not net.has_edge(leg.from_node, leg.to_node):
                    out.append(("edge", f"no segment {leg.from_node}-{leg.to_node}"))
                else:
                    km = net.distance(leg.from_node, leg.to_node)
                    if not _close(leg.duration_minutes, perf.travel_minutes(km)):
                        out.append(("timing", f"travel {leg.from_node}-{leg.to_node} takes "
                                              f"{perf.travel_minutes(km)} min, leg says {leg.duration_minutes}"))
                    for i in batt:
                        batt[i] = drain(perf, batt[i], payload[i], km)
                        if batt[i] < perf.reserve_percent - BATTERY_EPS:
                            out.append(("battery", f"drone {i} at {batt[i]:.6f}% after {leg.from_node}-{leg.to_node}"))
                node = leg.to_node
                if node == req.destination:
                    arrived = leg.end_minutes
            elif leg.to_node != leg.from_node:
                out.append(("continuity", f"{leg.kind} leg moves from {leg.from_node} to {leg.to_node}"))
            if leg.kind == CHARGE:
                ids = sorted(d.drone_id for d in leg.charges)
                if ids != sorted(batt):
                    out.append(("charging", f"charge at {node} does not cover sub-swarm {sid}"))
                durations = []
                for d in leg.charges:
                    if d.drone_id in batt and abs(d.from_percent - batt[d.drone_id]) > 1e-6:
                        out.append(("battery", f"drone {d.drone_id} charges from {d.from_percent}% "
                                               f"but holds {batt[d.drone_id]}%"))
                    batt[d.drone_id] = d.to_percent
                    durations.append(charge_duration(perf, d))
                total, longest, _ = rounds_total(durations, net.pad_count(node))
                if not _close(leg.duration_minutes, longest):
                    out.append(("charging", f"charge at {node} lasts {leg.duration_minutes}, expected {longest}"))
                if total - longest > 0:
                    pending_wait = total - longest
            clock = leg.end_minutes
        if pending_wait is not None:
            out.append(("charging", f"sub-swarm {sid} should wait {pending_wait} min for pads at {node}"))
        kids = children.get(sid, [])
        if kids:
            if arrived is not None:
                out.append(("conservation", f"sub-swarm {sid} splits after reaching the destination"))
            for k in kids:
                start[k] = (node, clock, batt)
                order.append(k)
        elif arrived is None:
            out.append(("conservation", f"sub-swarm {sid} never reaches the destination"))
        else:
            arrivals[sid] = arrived

    if arrivals:
        last = max(arrivals.values())
        spread = last - min(arrivals.values())
        if window_minutes is not None and spread > window_minutes + 1e-9:
            out.append(("window", f"arrival spread {spread:.3f} min exceeds window {window_minutes} min"))
        if not _close(it.total_delivery_minutes, last):
            out.append(("totals", f"total {it.total_delivery_minutes} differs from last arrival {last}"))
        if not _close(it.arrival_spread_minutes, spread):
            out.append(("totals", f"recorded spread {it.arrival_spread_minutes} differs from {spread}"))
    parts = it.travel_minutes + it.charge_minutes + it.wait_minutes
    if not _close(parts, it.total_delivery_minutes):
        out.append(("totals", f"travel + charge + wait = {parts} but total is {it.total_delivery_minutes}"))
    for name in ("travel_minutes", "charge_minutes", "wait_minutes"):
        if getattr(it, name) < 0:
            out.append(("totals", f"{name} is negative"))
    return out
