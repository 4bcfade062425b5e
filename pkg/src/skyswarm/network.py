"""Skyway network graph: nodes are recharging stations, edges are sky segments.

Node ids are dense integers ``0..n-1``.  The graph is undirected, simple and
connected; every node carries at least one recharging pad and every segment a
positive length in kilometres.  Instances are immutable after construction.

Every search here breaks ties deterministically (ascending node id, and
lexicographically smallest node sequence among equal-length routes) so that
experiments are reproducible bit for bit.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from collections import deque
from typing import IO, Iterable, Iterator, Sequence

from .errors import (
    InvalidParameter,
    ParseError,
    PathBudgetExceeded,
    UnknownNode,
    ValidationError,
)

Path = tuple[int, ...]


class SkywayNetwork:
    """Undirected weighted graph with a pad count per node.

    >>> net = SkywayNetwork([1, 2], [(0, 1, 12.5)])
    >>> net.distance(1, 0)
    12.5
    """

    __slots__ = ("_pads", "_adj", "_edges")

    def __init__(self, pads: Sequence[int], edges: Iterable[tuple[int, int, float]]):
        pads = tuple(pads)
        n = len(pads)
        if n == 0:
            raise ValidationError("non-empty", "network has no nodes")
        for i, p in enumerate(pads):
            if isinstance(p, bool) or not isinstance(p, int) or p < 1:
                raise ValidationError("pads>=1", f"node {i} has pad count {p!r}")
        adj: list[dict[int, float]] = [{} for _ in range(n)]
        for a, b, km in edges:
            for end in (a, b):
                if not isinstance(end, int) or not 0 <= end < n:
                    raise ValidationError("known-endpoint", f"edge endpoint {end!r} is not a node")
            if a == b:
                raise ValidationError("no-self-loop", f"edge {a}-{b} is a self-loop")
            if b in adj[a]:
                raise ValidationError("unique-edge", f"edge {min(a, b)}-{max(a, b)} listed twice")
            km = float(km)
            if not km > 0 or math.isinf(km):
                raise ValidationError("positive-distance", f"edge {a}-{b} has distance {km!r}")
            adj[a][b] = km
            adj[b][a] = km
        self._pads = pads
        self._adj = tuple({v: row[v] for v in sorted(row)} for row in adj)
        self._edges = tuple(
            sorted((a, b, km) for a, row in enumerate(self._adj) for b, km in row.items() if a < b)
        )
        if not _is_connected(self._adj):
            raise ValidationError("connected", "network is not connected")

    @property
    def node_count(self) -> int:
        return len(self._pads)

    @property
    def pads(self) -> tuple[int, ...]:
        return self._pads

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Each undirected edge once, as ``(a, b, km)`` with ``a < b``, sorted."""
        return self._edges

    def nodes(self) -> range:
        return range(len(self._pads))

    def check_node(self, node: int) -> None:
        if isinstance(node, bool) or not isinstance(node, int) or not 0 <= node < len(self._pads):
            raise UnknownNode(node)

    def pad_count(self, node: int) -> int:
        self.check_node(node)
        return self._pads[node]

    def neighbors(self, node: int) -> dict[int, float]:
        """Adjacent nodes in ascending id order mapped to segment length."""
        self.check_node(node)
        return self._adj[node]

    def has_edge(self, a: int, b: int) -> bool:
        return 0 <= a < len(self._adj) and b in self._adj[a]

    def distance(self, a: int, b: int) -> float:
        self.check_node(a)
        self.check_node(b)
        try:
            return self._adj[a][b]
        except KeyError:
            raise ValidationError("adjacent", f"no segment between {a} and {b}") from None

    def path_length(self, path: Sequence[int]) -> float:
        """Sum of segment lengths along ``path``, accumulated front to back."""
        total = 0.0
        for a, b in zip(path, path[1:]):
            total += self.distance(a, b)
        return total

    def __eq__(self, other):
        if not isinstance(other, SkywayNetwork):
            return NotImplemented
        return self._pads == other._pads and self._edges == other._edges

    def __hash__(self):
        return hash((self._pads, self._edges))

    def __repr__(self):
        return f"SkywayNetwork(nodes={self.node_count}, edges={len(self._edges)})"


def _is_connected(adj) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(adj)


# ---------------------------------------------------------------------------
# Shortest paths


def shortest_paths_from(net: SkywayNetwork, source: int,
                        blocked: Iterable[int] = ()) -> dict[int, tuple[float, Path]]:
    """Dijkstra from ``source`` to every node it can reach.

    Returns ``{node: (km, path)}``.  Among minimum-length routes the
    lexicographically smallest node sequence wins.  Distances are summed along
    the returned path from ``source`` outward.  Nodes in ``blocked`` are
    treated as removed from the graph.
    """
    net.check_node(source)
    blocked = set(blocked) - {source}
    best: dict[int, tuple[float, Path]] = {source: (0.0, (source,))}
    done: dict[int, tuple[float, Path]] = {}
    heap = [(0.0, (source,))]
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done[u] = (d, path)
        for v, km in net.neighbors(u).items():
            if v in done or v in blocked:
                continue
            cand = (d + km, path + (v,))
            if v not in best or cand < best[v]:
                best[v] = cand
                heapq.heappush(heap, cand)
    return done


def shortest_path(net: SkywayNetwork, source: int, target: int) -> tuple[Path, float]:
    """Minimum-distance simple path and its length in km."""
    net.check_node(target)
    km, path = shortest_paths_from(net, source)[target]
    return path, km


def hop_levels(net: SkywayNetwork, source: int, max_hops: int, blocked: Iterable[int] = ()) -> dict[int, int]:
    """Breadth-first hop distance of every node within ``max_hops`` of ``source``."""
    net.check_node(source)
    blocked = set(blocked) - {source}
    level = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if level[u] == max_hops:
            continue
        for v in net.neighbors(u):
            if v not in level and v not in blocked:
                level[v] = level[u] + 1
                queue.append(v)
    return level


def neighbors_within_lookahead(net: SkywayNetwork, source: int, lookahead: int,
                               distances: dict[int, tuple[float, Path]] | None = None,
                               blocked: Iterable[int] = ()) -> dict[int, float]:
    """Candidate next stops: every node 1..lookahead+1 hops away.

    Lookahead 0 therefore means directly connected nodes only.  Each node is
    paired with its shortest-path distance from ``source`` (which may run
    through nodes outside the hop ball).  ``distances`` may pass a
    precomputed :func:`shortest_paths_from` result for the same ``source``
    and ``blocked`` set.
    """
    if isinstance(lookahead, bool) or not isinstance(lookahead, int) or lookahead < 0:
        raise InvalidParameter(f"lookahead must be a non-negative integer, got {lookahead!r}")
    blocked = set(blocked)
    levels = hop_levels(net, source, lookahead + 1, blocked)
    if distances is None:
        distances = shortest_paths_from(net, source, blocked)
    return {v: distances[v][0] for v in sorted(levels) if v != source}


# ---------------------------------------------------------------------------
# Simple path enumeration


def iter_simple_paths(net: SkywayNetwork, source: int, target: int) -> Iterator[Path]:
    """Yield every simple ``source``-``target`` path, depth first, ascending neighbour ids.

    Branches from which ``target`` can no longer be reached without revisiting
    a node are cut, so the work done is proportional to the paths produced
    rather than to every simple path leaving ``source``.
    """
    net.check_node(source)
    net.check_node(target)
    if source == target:
        yield (source,)
        return
    path = [source]
    on_path = {source}
    stack = [iter(net.neighbors(source))]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path:
            continue
        if nxt == target:
            yield tuple(path) + (target,)
            continue
        if not reaches(net, nxt, target, on_path):
            continue
        path.append(nxt)
        on_path.add(nxt)
        stack.append(iter(net.neighbors(nxt)))


def reaches(net: SkywayNetwork, start: int, target: int, blocked: set[int]) -> bool:
    """Whether ``target`` is reachable from ``start`` without entering ``blocked``."""
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in net.neighbors(u):
            if v == target:
                return True
            if v not in seen and v not in blocked:
                seen.add(v)
                stack.append(v)
    return False


def enumerate_simple_paths(net: SkywayNetwork, source: int, target: int, max_paths: int) -> list[Path]:
    """All simple paths in DFS order; raises :class:`PathBudgetExceeded` past ``max_paths``.

    The exception carries the first ``max_paths`` paths.
    """
    if max_paths < 1:
        raise InvalidParameter("max_paths must be positive")
    found = []
    for p in iter_simple_paths(net, source, target):
        if len(found) == max_paths:
            raise PathBudgetExceeded(found, max_paths)
        found.append(p)
    return found


# ---------------------------------------------------------------------------
# JSON document


def save_network(net: SkywayNetwork) -> bytes:
    doc = {
        "nodes": [{"id": i, "pads": p} for i, p in enumerate(net.pads)],
        "edges": [{"a": a, "b": b, "km": km} for a, b, km in net.edges],
    }
    return json.dumps(doc, indent=1).encode("utf-8")


def _require_int(value, field):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected integer, got {value!r}", field=field)
    return value


def _require_keys(obj, keys, field):
    if not isinstance(obj, dict):
        raise ParseError(f"expected object, got {type(obj).__name__}", field=field)
    extra = set(obj) - set(keys)
    if extra:
        raise ParseError(f"unknown key(s) {sorted(extra)}", field=field)
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ParseError(f"missing key(s) {missing}", field=field)


def load_network(source: bytes | str | IO) -> SkywayNetwork:
    """Parse the JSON network document.

    ``source`` may be bytes, text, or a readable file object.  Schema problems
    raise :class:`ParseError`; graph invariant violations raise
    :class:`ValidationError`.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    _require_keys(doc, ("nodes", "edges"), "$")
    if not isinstance(doc["nodes"], list):
        raise ParseError("expected array", field="nodes")
    if not isinstance(doc["edges"], list):
        raise ParseError("expected array", field="edges")

    pads: dict[int, int] = {}
    for i, node in enumerate(doc["nodes"]):
        where = f"nodes[{i}]"
        _require_keys(node, ("id", "pads"), where)
        nid = _require_int(node["id"], where + ".id")
        count = _require_int(node["pads"], where + ".pads")
        if nid in pads:
            raise ValidationError("unique-id", f"node id {nid} listed twice")
        pads[nid] = count
    if sorted(pads) != list(range(len(pads))):
        raise ValidationError("dense-ids", "node ids must be exactly 0..n-1")

    edges = []
    for i, edge in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        _require_keys(edge, ("a", "b", "km"), where)
        a = _require_int(edge["a"], where + ".a")
        b = _require_int(edge["b"], where + ".b")
        km = edge["km"]
        if isinstance(km, bool) or not isinstance(km, (int, float)):
            raise ParseError(f"expected number, got {km!r}", field=where + ".km")
        edges.append((a, b, float(km)))
    return SkywayNetwork([pads[i] for i in range(len(pads))], edges)


def read_network(path) -> SkywayNetwork:
    with open(path, "rb") as fh:
        return load_network(fh)


def write_network(net: SkywayNetwork, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_network(net))


# ---------------------------------------------------------------------------
# Synthetic networks


def generate_random_network(node_count: int, edge_density: float, pad_range: tuple[int, int],
                            distance_range: tuple[float, float], seed: int) -> SkywayNetwork:
    """Random road-like skyway network.

    Nodes are scattered in the unit square; the topology is their Euclidean
    minimum spanning tree plus the shortest remaining chords until the graph
    density ``2m / (n (n-1))`` reaches ``edge_density``.  This keeps the
    sparse, locally meshed shape of a street graph.  Pad counts are uniform
    integers in ``pad_range`` and segment lengths uniform in
    ``distance_range`` (inclusive bounds).
    """
    if node_count < 2:
        raise InvalidParameter("node_count must be at least 2")
    if not 0 <= edge_density <= 1:
        raise InvalidParameter("edge_density must lie in [0, 1]")
    lo_pad, hi_pad = pad_range
    if lo_pad < 1 or hi_pad < lo_pad:
        raise InvalidParameter(f"bad pad_range {pad_range!r}")
    lo_km, hi_km = distance_range
    if lo_km <= 0 or hi_km < lo_km:
        raise InvalidParameter(f"bad distance_range {distance_range!r}")

    rng = random.Random(seed)
    pts = [(rng.random(), rng.random()) for _ in range(node_count)]

    def d2(i, j):
        return (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2

    # Prim's algorithm, O(n^2)
    in_tree = [False] * node_count
    best = [math.inf] * node_count
    parent = [-1] * node_count
    best[0] = 0.0
    pairs = set()
    for _ in range(node_count):
        u = min((i for i in range(node_count) if not in_tree[i]), key=lambda i: (best[i], i))
        in_tree[u] = True
        if parent[u] >= 0:
            pairs.add((min(u, parent[u]), max(u, parent[u])))
        for v in range(node_count):
            if not in_tree[v] and d2(u, v) < best[v]:
                best[v] = d2(u, v)
                parent[v] = u

    max_edges = node_count * (node_count - 1) // 2
    target = max(node_count - 1, min(max_edges, round(edge_density * max_edges)))
    chords = sorted(
        (d2(i, j), i, j) for i in range(node_count) for j in range(i + 1, node_count) if (i, j) not in pairs
    )
    for _, i, j in chords[: target - len(pairs)]:
        pairs.add((i, j))

    pads = [rng.randint(lo_pad, hi_pad) for _ in range(node_count)]
    edges = [(a, b, rng.uniform(lo_km, hi_km)) for a, b in sorted(pairs)]
    return SkywayNetwork(pads, edges)
