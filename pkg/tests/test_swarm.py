from functools import lru_cache

import pytest
from sympy.utilities.iterables import multiset_partitions

from skyswarm.energy import DronePerformance
from skyswarm.errors import IllegalSplit, InvalidParameter, PartitionLimitExceeded, PayloadExceedsCapacity, TooFewPackages
from skyswarm.swarm import (
    DeliveryRequest,
    Drone,
    SubSwarm,
    build_swarm,
    enumerate_partitions,
    iter_partitions,
    split_off,
)

PERF = DronePerformance()


def swarm_of(n):
    return SubSwarm(tuple(Drone(i, 100.0, 1.0) for i in range(n)), 0)


@lru_cache(maxsize=None)
def associated_stirling(n, k):
    """Partitions of n labelled items into k blocks of size >= 2."""
    if n == 0 and k == 0:
        return 1
    if n <= 0 or k <= 0:
        return 0
    return k * associated_stirling(n - 1, k) + (n - 1) * associated_stirling(n - 2, k - 1)


def brute_partitions(n, max_splits):
    out = set()
    for m in range(1, max_splits + 1):
        for p in multiset_partitions(list(range(n)), m):
            if all(len(b) >= 2 for b in p):
                out.add(tuple(sorted(tuple(sorted(b)) for b in p)))
    return out


# --- requests and swarms ---------------------------------------------------

def test_build_swarm_assigns_one_drone_per_package():
    sw = build_swarm(DeliveryRequest(0, 3, (1.0, 2.5, 5.0)), PERF)
    assert sw.ids == (0, 1, 2)
    assert [d.payload_kg for d in sw.drones] == [1.0, 2.5, 5.0]
    assert all(d.battery_percent == 100.0 for d in sw.drones)
    assert sw.current_node == 0


def test_build_swarm_errors():
    with pytest.raises(TooFewPackages):
        build_swarm(DeliveryRequest(0, 1, (1.0,)), PERF)
    with pytest.raises(PayloadExceedsCapacity):
        build_swarm(DeliveryRequest(0, 1, (1.0, 5.01)), PERF)


def test_request_validation_and_json():
    with pytest.raises(InvalidParameter):
        DeliveryRequest(2, 2, (1.0, 1.0))
    with pytest.raises(InvalidParameter):
        DeliveryRequest(0, 2, (1.0, 0.0))
    req = DeliveryRequest(0, 2, (1.5, 2))
    assert DeliveryRequest.from_json(req.to_json()) == req


# --- partitions ------------------------------------------------------------

@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("x", [1, 2, 3, 4])
def test_partition_counts_match_brute_force(n, x):
    ours = [tuple(sorted(p)) for p in iter_partitions(range(n), x)]
    ref = brute_partitions(n, x)
    assert len(ours) == len(set(ours))
    assert set(ours) == ref
    assert len(ours) == sum(associated_stirling(n, k) for k in range(1, x + 1))


def test_known_counts():
    # 6 drones, two blocks of >= 2: C(6,2)+C(6,3)/2 = 15 + 10
    assert len(list(iter_partitions(range(6), 2))) == 1 + 25
    assert associated_stirling(8, 4) == 105


def test_unsplit_swarm_comes_first():
    first = next(iter_partitions([4, 2, 9], 3))
    assert first == ((2, 4, 9),)


def test_enumerate_partitions_limit():
    with pytest.raises(PartitionLimitExceeded):
        enumerate_partitions(swarm_of(10), 4, limit=100)
    assert len(enumerate_partitions(swarm_of(4), 2)) == 4


def test_enumerate_partitions_bad_input():
    with pytest.raises(InvalidParameter):
        enumerate_partitions(swarm_of(4), 0)
    with pytest.raises(InvalidParameter):
        enumerate_partitions(SubSwarm((Drone(0, 100.0, 1.0),), 0), 2)


def test_split_off():
    taken, kept = split_off(swarm_of(5), [3, 1])
    assert taken.ids == (1, 3)
    assert kept.ids == (0, 2, 4)
    with pytest.raises(IllegalSplit):
        split_off(swarm_of(4), [0, 1, 2])
    with pytest.raises(IllegalSplit):
        split_off(swarm_of(4), [0])
    with pytest.raises(IllegalSplit):
        split_off(swarm_of(4), [0, 9])
