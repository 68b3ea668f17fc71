"""Immutable graphs, deterministic generators, and distance strata around faulty nodes."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable

from .errors import ConfigError

#: Distance value used for nodes that no source can reach.
UNREACHABLE = math.inf

GRAPH_KINDS = (
    "ring",
    "path",
    "star",
    "complete",
    "grid",
    "erdos_renyi",
    "random_tree",
)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over dense node indices 0..n-1.

    Immutable after construction; safe to share between concurrent trials.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    adjacency: tuple[tuple[int, ...], ...]
    max_degree: int

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]


def make_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build a validated Graph from an edge list.

    Self-loops are rejected, duplicates collapse, endpoints must lie in [0, n).
    """
    if n < 0:
        raise ConfigError(f"node count must be nonnegative, got {n}")
    normalized = set()
    for u, v in edges:
        if u == v:
            raise ConfigError(f"self-loop on node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ConfigError(f"edge ({u},{v}) out of range for n={n}")
        normalized.add((min(u, v), max(u, v)))
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in normalized:
        adj[u].append(v)
        adj[v].append(u)
    adjacency = tuple(tuple(sorted(nb)) for nb in adj)
    max_degree = max((len(nb) for nb in adjacency), default=0)
    return Graph(n, frozenset(normalized), adjacency, max_degree)


def _require_positive(name: str, value: int) -> int:
    if not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def ring(n: int) -> Graph:
    _require_positive("n", n)
    if n == 1:
        return make_graph(1, [])
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    _require_positive("n", n)
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves: int) -> Graph:
    """Star with center 0 and `leaves` outer nodes 1..leaves."""
    _require_positive("leaves", leaves)
    return make_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete(n: int) -> Graph:
    _require_positive("n", n)
    return make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def grid(rows: int, cols: int) -> Graph:
    """Rectangular grid, nodes numbered row-major."""
    _require_positive("rows", rows)
    _require_positive("cols", cols)
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return make_graph(rows * cols, edges)


def erdos_renyi(n: int, p: float, seed: int = 0) -> Graph:
    """G(n, p): every pair drawn independently. Connectedness is not guaranteed."""
    _require_positive("n", n)
    if not (0.0 <= p <= 1.0):
        raise ConfigError(f"edge probability must be in [0,1], got {p}")
    rng = random.Random(seed)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return make_graph(n, edges)


def random_tree(n: int, seed: int = 0) -> Graph:
    """Random attachment tree: node i links to a uniform earlier node."""
    _require_positive("n", n)
    rng = random.Random(seed)
    return make_graph(n, [(i, rng.randrange(i)) for i in range(1, n)])


def generate_graph(kind: str, seed: int = 0, **params) -> Graph:
    """Dispatch to a generator by kind. Identical (kind, params, seed) gives identical edges."""
    if kind == "ring":
        return ring(params["n"])
    if kind == "path":
        return path(params["n"])
    if kind == "star":
        return star(params["leaves"])
    if kind == "complete":
        return complete(params["n"])
    if kind == "grid":
        return grid(params["rows"], params["cols"])
    if kind == "erdos_renyi":
        return erdos_renyi(params["n"], params["p"], seed)
    if kind == "random_tree":
        return random_tree(params["n"], seed)
    raise ConfigError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")


def near_square_grid(n: int) -> tuple[int, int]:
    """Largest divisor pair (rows, cols) with rows <= cols, used by size sweeps."""
    _require_positive("n", n)
    rows = 1
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            rows = d
    return rows, n // rows


def sized_params(kind: str, size: int) -> dict:
    """Kind-specific parameters that realize a sweep size of `size` nodes."""
    if kind in ("ring", "path", "complete", "erdos_renyi", "random_tree"):
        return {"n": size}
    if kind == "star":
        return {"leaves": size - 1}
    if kind == "grid":
        rows, cols = near_square_grid(size)
        return {"rows": rows, "cols": cols}
    raise ConfigError(f"graph kind {kind!r} cannot be sized in a sweep")


def distances_from(g: Graph, sources: Iterable[int]) -> list[float]:
    """Multi-source BFS distance per node; UNREACHABLE where no source reaches.

    An empty source set makes every node unreachable.
    """
    dist: list[float] = [UNREACHABLE] * g.n
    queue: deque[int] = deque()
    for s in sources:
        if not (0 <= s < g.n):
            raise ConfigError(f"source node {s} out of range for n={g.n}")
        if dist[s] != 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] == UNREACHABLE:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def safe_zone(g: Graph, faulty: Iterable[int], i: int) -> frozenset[int]:
    """Nodes at graph distance strictly greater than i from every faulty node.

    With an empty faulty set this is all of V, for every i.
    """
    dist = distances_from(g, faulty)
    return frozenset(u for u in range(g.n) if dist[u] > i)


def write_graph(g: Graph, fh: IO[str]) -> None:
    """Plain-text format: first line "n m", then one "u v" line per edge."""
    fh.write(f"{g.n} {len(g.edges)}\n")
    for u, v in sorted(g.edges):
        fh.write(f"{u} {v}\n")


def read_graph(fh: IO[str]) -> Graph:
    header = fh.readline().split()
    if len(header) != 2:
        raise ConfigError("graph file must start with a 'n m' line")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ConfigError(f"bad graph header: {exc}") from exc
    edges = []
    for _ in range(m):
        parts = fh.readline().split()
        if len(parts) != 2:
            raise ConfigError("each edge line must contain exactly 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    return make_graph(n, edges)
