"""Battery consumption, linear charging, and node time under pad contention.

All battery quantities are percentages of a full charge.  Node time at a
station is ``charging + waiting``: drones are served in rounds of at most
``pad_count`` concurrent charges, longest charge first, and each round lasts
as long as its slowest drone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidParameter, PayloadExceedsCapacity

# Absolute slack (in battery percent) for reachability and re-simulation checks.
# Summing per-segment consumption and multiplying by a summed distance differ
# by a few ulps; this keeps the two views consistent.
BATTERY_EPS = 1e-9


@dataclass(frozen=True)
class DronePerformance:
    """Fleet-wide drone parameters.  Defaults reproduce the reference experiments:
    65 km/h, 60 minutes from empty to full, 1 % per 10 km carrying 5 kg."""

    speed_kmh: float = 65.0
    full_charge_min: float = 60.0
    rate_percent_per_km_at_ref: float = 0.1
    ref_payload_kg: float = 5.0
    base_fraction: float = 0.5
    max_payload_kg: float = 5.0
    reserve_percent: float = 0.0

    def __post_init__(self):
        if not (self.speed_kmh > 0 and self.full_charge_min > 0 and self.rate_percent_per_km_at_ref > 0):
            raise InvalidParameter("speed, charge time and consumption rate must be positive")
        if not 0 <= self.base_fraction <= 1:
            raise InvalidParameter("base_fraction must lie in [0, 1]")
        if not 0 < self.ref_payload_kg <= self.max_payload_kg:
            raise InvalidParameter("need 0 < ref_payload_kg <= max_payload_kg")
        if not 0 <= self.reserve_percent < 100:
            raise InvalidParameter("reserve_percent must lie in [0, 100)")

    def travel_minutes(self, km: float) -> float:
        return km / self.speed_kmh * 60.0


@dataclass(frozen=True)
class ChargeDemand:
    drone_id: int
    from_percent: float
    to_percent: float

    def __post_init__(self):
        if not (0 <= self.from_percent <= self.to_percent <= 100):
            raise InvalidParameter(f"bad charge demand {self!r}")


@dataclass(frozen=True)
class NodeTimeBreakdown:
    charging_minutes: float = 0.0
    waiting_minutes: float = 0.0
    total_minutes: float = 0.0
    rounds: int = 0


def consumption_rate(perf: DronePerformance, payload_kg: float) -> float:
    """Battery percent used per km at ``payload_kg``.

    Affine in payload and exact at the reference payload; with
    ``base_fraction = 0`` it is purely proportional to the weight carried.
    """
    if payload_kg > perf.max_payload_kg:
        raise PayloadExceedsCapacity(f"payload {payload_kg} kg exceeds capacity {perf.max_payload_kg} kg")
    if payload_kg < 0:
        raise InvalidParameter("payload must be non-negative")
    if payload_kg == perf.ref_payload_kg:
        return perf.rate_percent_per_km_at_ref
    f = perf.base_fraction
    return perf.rate_percent_per_km_at_ref * (f + (1.0 - f) * payload_kg / perf.ref_payload_kg)


def required_percent(perf: DronePerformance, payload_kg: float, distance_km: float) -> float:
    return consumption_rate(perf, payload_kg) * distance_km


def can_reach(perf: DronePerformance, battery_percent: float, payload_kg: float, distance_km: float,
              reserve_percent: float | None = None) -> bool:
    """Whether ``distance_km`` can be flown and still leave the reserve (inclusive)."""
    reserve = perf.reserve_percent if reserve_percent is None else reserve_percent
    left = battery_percent - required_percent(perf, payload_kg, distance_km)
    return left >= reserve - BATTERY_EPS


def drain(perf: DronePerformance, battery_percent: float, payload_kg: float, distance_km: float) -> float:
    """Battery left after flying ``distance_km``; float dust below zero is clamped."""
    left = battery_percent - required_percent(perf, payload_kg, distance_km)
    if -BATTERY_EPS < left < 0:
        return 0.0
    return left


def max_range_km(perf: DronePerformance, battery_percent: float, payload_kg: float) -> float:
    return max(0.0, battery_percent - perf.reserve_percent) / consumption_rate(perf, payload_kg)


def charge_duration(perf: DronePerformance, demand: ChargeDemand) -> float:
    return (demand.to_percent - demand.from_percent) / 100.0 * perf.full_charge_min


def round_schedule(durations: Sequence[float], pad_count: int) -> list[list[float]]:
    """Longest-first batches of at most ``pad_count`` charges."""
    if pad_count < 1:
        raise InvalidParameter("pad_count must be at least 1")
    ordered = sorted(durations, reverse=True)
    return [ordered[i:i + pad_count] for i in range(0, len(ordered), pad_count)]


def rounds_total(durations: Sequence[float], pad_count: int) -> tuple[float, float, int]:
    """``(total, longest, rounds)`` for the round schedule."""
    total = 0.0
    rounds = round_schedule(durations, pad_count)
    for batch in rounds:
        total += batch[0]
    longest = rounds[0][0] if rounds else 0.0
    return total, longest, len(rounds)


def node_time(perf: DronePerformance, demands: Sequence[ChargeDemand], pad_count: int) -> NodeTimeBreakdown:
    """Charging (longest single charge) plus waiting (the remaining rounds).

    >>> perf = DronePerformance()
    >>> d = [ChargeDemand(i, 100 - m / 0.6, 100) for i, m in enumerate([30, 30, 20, 20, 10])]
    >>> nt = node_time(perf, d, 2)
    >>> round(nt.total_minutes, 9), round(nt.charging_minutes, 9), nt.rounds
    (60.0, 30.0, 3)
    """
    durations = [charge_duration(perf, d) for d in demands]
    total, longest, rounds = rounds_total(durations, pad_count)
    return NodeTimeBreakdown(longest, total - longest, total, rounds)


def full_charge_demands(batteries: Sequence[float], ids: Sequence[int] | None = None) -> list[ChargeDemand]:
    ids = range(len(batteries)) if ids is None else ids
    return [ChargeDemand(i, b, 100.0) for i, b in zip(ids, batteries)]


def cooperative_targets(perf: DronePerformance, drones: Sequence[tuple[float, float]], pad_count: int,
                        next_leg_km: float, ids: Sequence[int] | None = None,
                        reserve_percent: float | None = None) -> list[ChargeDemand]:
    """Charge demands when drones share too few pads.

    ``drones`` holds ``(battery_percent, payload_kg)`` pairs.  While every
    drone has a pad of its own, everybody charges to full.  Otherwise each
    drone charges only enough for ``next_leg_km`` plus the reserve, capped at
    100 % and never below its current level.
    """
    if next_leg_km < 0:
        raise InvalidParameter("next_leg_km must be non-negative")
    ids = list(range(len(drones))) if ids is None else list(ids)
    if len(drones) <= pad_count:
        return full_charge_demands([b for b, _ in drones], ids)
    reserve = perf.reserve_percent if reserve_percent is None else reserve_percent
    out = []
    for i, (battery, payload) in zip(ids, drones):
        need = required_percent(perf, payload, next_leg_km) + reserve
        out.append(ChargeDemand(i, battery, max(battery, min(100.0, need))))
    return out
