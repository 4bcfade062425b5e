"""Drones, sub-swarms, delivery requests, and legal swarm partitions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .energy import DronePerformance
from .errors import IllegalSplit, InvalidParameter, PartitionLimitExceeded, PayloadExceedsCapacity, TooFewPackages

MIN_SUBSWARM = 2
DEFAULT_PARTITION_LIMIT = 100_000


@dataclass(frozen=True)
class DeliveryRequest:
    source: int
    destination: int
    package_weights_kg: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "package_weights_kg", tuple(float(w) for w in self.package_weights_kg))
        if self.source == self.destination:
            raise InvalidParameter("source and destination must differ")
        if any(not w > 0 for w in self.package_weights_kg):
            raise InvalidParameter("package weights must be positive")

    def to_json(self) -> dict:
        return {"source": self.source, "destination": self.destination,
                "weights_kg": list(self.package_weights_kg)}

    @classmethod
    def from_json(cls, obj: dict) -> DeliveryRequest:
        return cls(int(obj["source"]), int(obj["destination"]), tuple(obj["weights_kg"]))


@dataclass(frozen=True)
class Drone:
    id: int
    battery_percent: float
    payload_kg: float


@dataclass(frozen=True)
class SubSwarm:
    drones: tuple[Drone, ...]
    current_node: int
    clock_minutes: float = 0.0

    def __post_init__(self):
        if not self.drones:
            raise InvalidParameter("a sub-swarm needs at least one drone")
        ids = [d.id for d in self.drones]
        if len(set(ids)) != len(ids):
            raise InvalidParameter("duplicate drone id in sub-swarm")

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(d.id for d in self.drones)

    def __len__(self):
        return len(self.drones)


@dataclass(frozen=True)
class SwarmPartition:
    parts: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.parts)


def build_swarm(request: DeliveryRequest, perf: DronePerformance) -> SubSwarm:
    """One fully charged drone per package, drone ``i`` carrying package ``i``."""
    weights = request.package_weights_kg
    if len(weights) < MIN_SUBSWARM:
        raise TooFewPackages(f"a swarm delivery needs at least {MIN_SUBSWARM} packages, got {len(weights)}")
    for i, w in enumerate(weights):
        if w > perf.max_payload_kg:
            raise PayloadExceedsCapacity(f"package {i} weighs {w} kg, capacity is {perf.max_payload_kg} kg")
    drones = tuple(Drone(i, 100.0, w) for i, w in enumerate(weights))
    return SubSwarm(drones, request.source, 0.0)


def iter_partitions(ids: Iterable[int], max_splits: int, min_size: int = MIN_SUBSWARM) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Set partitions of ``ids`` into at most ``max_splits`` blocks of at least ``min_size``.

    Generated by restricted growth over the sorted ids, so blocks come out
    ordered by smallest member and the unsplit swarm is always first.
    """
    items = sorted(ids)
    n = len(items)
    blocks: list[list[int]] = []

    def grow(i):
        if i == n:
            yield tuple(tuple(b) for b in blocks)
            return
        x = items[i]
        remaining = n - i
        for b in blocks:
            b.append(x)
            if _deficit(blocks, min_size) <= remaining - 1:
                yield from grow(i + 1)
            b.pop()
        if len(blocks) < max_splits:
            blocks.append([x])
            if _deficit(blocks, min_size) <= remaining - 1:
                yield from grow(i + 1)
            blocks.pop()

    yield from grow(0)


def _deficit(blocks, min_size):
    return sum(max(0, min_size - len(b)) for b in blocks)


def enumerate_partitions(swarm: SubSwarm, max_splits: int,
                         limit: int = DEFAULT_PARTITION_LIMIT) -> list[SwarmPartition]:
    if max_splits < 1:
        raise InvalidParameter("max_splits must be at least 1")
    if len(swarm) < MIN_SUBSWARM:
        raise InvalidParameter("cannot partition a swarm of fewer than two drones")
    out = []
    for parts in iter_partitions(swarm.ids, max_splits):
        if len(out) == limit:
            raise PartitionLimitExceeded(f"more than {limit} partitions for {len(swarm)} drones")
        out.append(SwarmPartition(parts))
    return out


def split_off(swarm: SubSwarm, ids: Iterable[int]) -> tuple[SubSwarm, SubSwarm]:
    """Detach ``ids`` as their own sub-swarm; both halves keep node and clock."""
    chosen = set(ids)
    unknown = chosen - set(swarm.ids)
    if unknown:
        raise IllegalSplit(f"drones {sorted(unknown)} are not in the swarm")
    if len(chosen) < MIN_SUBSWARM:
        raise IllegalSplit(f"split-off part has {len(chosen)} drones, minimum is {MIN_SUBSWARM}")
    rest = len(swarm) - len(chosen)
    if rest < MIN_SUBSWARM:
        raise IllegalSplit(f"remainder has {rest} drones, minimum is {MIN_SUBSWARM}")
    taken = tuple(d for d in swarm.drones if d.id in chosen)
    kept = tuple(d for d in swarm.drones if d.id not in chosen)
    return (SubSwarm(taken, swarm.current_node, swarm.clock_minutes),
            SubSwarm(kept, swarm.current_node, swarm.clock_minutes))
