"""Undirected connected communication graphs.

A :class:`Graph` stores the network topology as a canonical edge set plus,
for every node ``i``, the ordered neighbor sequence ``S_i`` (ascending node
ids, self excluded).  Graphs are immutable after construction and safe to
share across parallel trials.

Random generation supports two models:

* ``geometric(radius)`` -- nodes placed uniformly in the unit square, an
  edge whenever the Euclidean distance is at most ``radius``;
* ``gnp(p)`` -- each pair connected independently with probability ``p``.

Generation is a pure function of ``(n, model parameters, seed)``: a
disconnected sample is retried with an incremented sub-seed, so re-running
with the same arguments always yields the identical edge set.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import Disconnected, DuplicateEdge, OutOfRange, RetriesExhausted, SelfLoop

__all__ = [
    "Graph",
    "build_graph",
    "degree",
    "random_connected_graph",
    "graph_to_json",
    "graph_from_json",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph with sorted neighbor sequences.

    Attributes
    ----------
    n : int
        Node count; node ids are ``0 .. n-1``.
    edges : tuple of (int, int)
        Canonical edge set, each pair ``(i, j)`` with ``i < j``, sorted.
    adjacency : tuple of tuple of int
        ``adjacency[i]`` is the neighbor sequence ``S_i`` in ascending
        order, never containing ``i`` itself.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.n:
            raise OutOfRange(f"node {i} not in [0, {self.n})")
        return self.adjacency[i]


def _connected(n: int, adjacency: list[list[int]]) -> bool:
    # BFS from node 0; a graph with a single node is connected.
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def build_graph(n: int, edge_list) -> Graph:
    """Validate an edge list and build a :class:`Graph`.

    Parameters
    ----------
    n : int
        Number of nodes, must be positive.
    edge_list : iterable of (int, int)
        Unordered node pairs.  Duplicates (in either orientation),
        self-loops, out-of-range ids, and disconnected results are
        rejected.
    """
    if n < 1:
        raise OutOfRange(f"node count must be positive, got {n}")
    canonical: set[tuple[int, int]] = set()
    for pair in edge_list:
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < n and 0 <= j < n):
            raise OutOfRange(f"edge ({i}, {j}) references a node outside [0, {n})")
        if i == j:
            raise SelfLoop(f"self-loop at node {i}")
        key = (i, j) if i < j else (j, i)
        if key in canonical:
            raise DuplicateEdge(f"edge {key} listed more than once")
        canonical.add(key)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i, j in canonical:
        adjacency[i].append(j)
        adjacency[j].append(i)
    if not _connected(n, adjacency):
        raise Disconnected(f"graph on {n} nodes with {len(canonical)} edges is not connected")
    return Graph(
        n=n,
        edges=tuple(sorted(canonical)),
        adjacency=tuple(tuple(sorted(nbrs)) for nbrs in adjacency),
    )


def degree(g: Graph, i: int) -> int:
    """Number of distinct neighbors of node ``i``, excluding ``i`` itself."""
    if not 0 <= i < g.n:
        raise OutOfRange(f"node {i} not in [0, {g.n})")
    return len(g.adjacency[i])


def _sample_edges(n: int, model: str, radius: float, p: float, rng: np.random.Generator):
    if model == "geometric":
        pos = rng.random((n, 2))
        d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
        iu, ju = np.triu_indices(n, k=1)
        mask = d2[iu, ju] <= radius * radius
    elif model == "gnp":
        iu, ju = np.triu_indices(n, k=1)
        mask = rng.random(iu.size) < p
    else:
        raise ValueError(f"unknown random graph model {model!r}")
    return [(int(i), int(j)) for i, j in zip(iu[mask], ju[mask])]


def random_connected_graph(
    n: int,
    model: str = "geometric",
    *,
    radius: float = 0.5,
    p: float = 0.5,
    seed: int = 0,
    max_retries: int = 1000,
) -> Graph:
    """Generate a random connected graph, deterministically per seed.

    Attempt ``k`` uses the RNG stream ``SeedSequence((seed, k))``; the first
    connected sample is returned.  Raises :class:`RetriesExhausted` after
    ``max_retries`` disconnected samples.
    """
    if n < 1:
        raise OutOfRange(f"node count must be positive, got {n}")
    if model == "geometric" and not 0.0 < radius <= np.sqrt(2.0):
        raise ValueError(f"radius must lie in (0, sqrt(2)], got {radius}")
    if model == "gnp" and not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        edges = _sample_edges(n, model, radius, p, rng)
        try:
            return build_graph(n, edges)
        except Disconnected:
            continue
    raise RetriesExhausted(
        f"no connected sample in {max_retries} attempts (n={n}, model={model})"
    )


# ---------------------------------------------------------------------------
# Serialization: canonical JSON with a bit-exact round trip.
# ---------------------------------------------------------------------------


def graph_to_json(g: Graph, *, seed=None, model=None) -> str:
    doc = {
        "n": g.n,
        "edges": [[i, j] for i, j in g.edges],
        "seed": seed,
        "model": model,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_json(text: str):
    doc = json.loads(text)
    g = build_graph(doc["n"], doc["edges"])
    return g, doc.get("seed"), doc.get("model")


def save_graph(g: Graph, path, *, seed=None, model=None) -> None:
    Path(path).write_text(graph_to_json(g, seed=seed, model=model), encoding="utf-8")


def load_graph(path):
    return graph_from_json(Path(path).read_text(encoding="utf-8"))
