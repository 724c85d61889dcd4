"""Client communication graph with per-edge direction/bucket counters.

Edges are unordered user pairs stored under a canonical key (the
lexicographically smaller id first).  Each edge carries 12 counters:
direction (relative to the canonical endpoint) x time bucket x
{call count, total duration}.  Graphs built from record shards merge by
counter addition, so sharded construction commutes with single-pass
construction.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

from .core import CallRecord, Direction, TimeBucket

# Counter layout: index = direction * 6 + bucket * 2 + metric, where
# direction 0 = outgoing from the canonical endpoint, 1 = incoming to it;
# bucket follows TimeBucket; metric 0 = call count, 1 = duration seconds.
N_COUNTERS = 12
_OUT, _IN = 0, 1
_CALLS, _DURATION = 0, 1


def counter_index(direction_out: bool, bucket: TimeBucket, metric: int) -> int:
    return (0 if direction_out else 6) + bucket * 2 + metric


class EdgeStats:
    """Aggregated call counters for one unordered user pair."""

    __slots__ = ("counts",)

    def __init__(self, counts: Iterable[int] | None = None):
        self.counts = list(counts) if counts is not None else [0] * N_COUNTERS
        if len(self.counts) != N_COUNTERS:
            raise ValueError(f"expected {N_COUNTERS} counters, got {len(self.counts)}")

    def calls(self, direction: Direction | None = None, bucket: TimeBucket | None = None) -> int:
        return self._sum(_CALLS, direction, bucket)

    def duration_s(self, direction: Direction | None = None, bucket: TimeBucket | None = None) -> int:
        return self._sum(_DURATION, direction, bucket)

    def _sum(self, metric: int, direction: Direction | None, bucket: TimeBucket | None) -> int:
        dirs = (_OUT, _IN) if direction is None else (
            (_OUT,) if direction is Direction.OUTGOING else (_IN,)
        )
        buckets = tuple(TimeBucket) if bucket is None else (bucket,)
        return sum(self.counts[d * 6 + b * 2 + metric] for d in dirs for b in buckets)

    @property
    def total_calls(self) -> int:
        return self._sum(_CALLS, None, None)

    @property
    def total_duration_s(self) -> int:
        return self._sum(_DURATION, None, None)

    def oriented(self, flip: bool) -> list[int]:
        """Counters with direction re-expressed relative to the queried endpoint."""
        if not flip:
            return list(self.counts)
        return self.counts[6:] + self.counts[:6]

    def merged(self, other: "EdgeStats") -> "EdgeStats":
        return EdgeStats([a + b for a, b in zip(self.counts, other.counts)])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EdgeStats) and self.counts == other.counts

    def __repr__(self) -> str:
        return f"EdgeStats({self.counts})"


class CommGraph:
    """Undirected communication graph over users.

    ``clients`` is the subset of nodes that appear as the logged client in
    at least one record; only clients have location data downstream.
    """

    __slots__ = ("nodes", "clients", "edges", "_adj")

    def __init__(
        self,
        nodes: set[str] | None = None,
        clients: set[str] | None = None,
        edges: dict[tuple[str, str], EdgeStats] | None = None,
    ):
        self.nodes: set[str] = nodes if nodes is not None else set()
        self.clients: set[str] = clients if clients is not None else set()
        self.edges: dict[tuple[str, str], EdgeStats] = edges if edges is not None else {}
        adj: dict[str, set[str]] = {}
        for a, b in self.edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        self._adj = adj

    @classmethod
    def empty(cls) -> "CommGraph":
        return cls()

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, user: str) -> set[str]:
        """All users sharing an edge with ``user``; empty for unknown users."""
        return set(self._adj.get(user, ()))

    def degree(self, user: str) -> int:
        return len(self._adj.get(user, ()))

    def edge_stats(self, u: str, v: str) -> EdgeStats | None:
        key = (u, v) if u < v else (v, u)
        return self.edges.get(key)

    def edge_counts_from(self, u: str, v: str) -> list[int] | None:
        """Edge counters oriented so direction is relative to ``u``."""
        stats = self.edge_stats(u, v)
        if stats is None:
            return None
        return stats.oriented(flip=u > v)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CommGraph)
            and self.nodes == other.nodes
            and self.clients == other.clients
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"CommGraph(nodes={len(self.nodes)}, clients={len(self.clients)}, edges={len(self.edges)})"


def build_graph(records: Iterable[CallRecord]) -> CommGraph:
    """Accumulate records into a graph; each record increments exactly one
    call counter (plus its duration counter)."""
    nodes: set[str] = set()
    clients: set[str] = set()
    edges: dict[tuple[str, str], EdgeStats] = {}
    outgoing = Direction.OUTGOING
    for rec in records:
        c = rec.caller
        e = rec.callee
        if c < e:
            key = (c, e)
            rel_out = rec.direction is outgoing
        else:
            key = (e, c)
            rel_out = rec.direction is not outgoing
        stats = edges.get(key)
        if stats is None:
            stats = EdgeStats()
            edges[key] = stats
        i = (0 if rel_out else 6) + rec.bucket * 2
        counts = stats.counts
        counts[i] += 1
        counts[i + 1] += rec.duration_s
        nodes.add(c)
        nodes.add(e)
        clients.add(c)
    return CommGraph(nodes=nodes, clients=clients, edges=edges)


def merge_graphs(g1: CommGraph, g2: CommGraph) -> CommGraph:
    """Counter-wise sum with node/client union (commutative, associative,
    identity = the empty graph)."""
    edges = {key: EdgeStats(stats.counts) for key, stats in g1.edges.items()}
    for key, stats in g2.edges.items():
        current = edges.get(key)
        if current is None:
            edges[key] = EdgeStats(stats.counts)
        else:
            current.counts = [a + b for a, b in zip(current.counts, stats.counts)]
    return CommGraph(nodes=g1.nodes | g2.nodes, clients=g1.clients | g2.clients, edges=edges)


def write_edges_csv(graph: CommGraph, path: str | Path) -> None:
    """Debug dump: one row per edge in canonical order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_a", "user_b", "calls_total", "duration_total_s"])
        for (a, b) in sorted(graph.edges):
            stats = graph.edges[(a, b)]
            writer.writerow([a, b, stats.total_calls, stats.total_duration_s])
