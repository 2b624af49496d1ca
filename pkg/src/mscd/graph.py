"""Static undirected weighted graph with a flat CSR-style adjacency.

Node labels in input files are arbitrary nonnegative integers.  Internally
nodes are renumbered to dense ids 0..node_count-1 in ascending label order;
``Graph.labels`` maps ids back to labels.  Adjacency lists are stored in three
flat Python lists (``indptr``, ``nbr``, ``wgt``) so the hot loops in the
growth engine can index them without attribute lookups per edge.
"""

from __future__ import annotations

import logging
import math
from typing import IO, Iterable, Iterator

logger = logging.getLogger(__name__)

__all__ = [
    "EdgeListParseError",
    "Graph",
    "parse_edge_list",
    "load_edge_list",
    "write_edge_list",
    "neighbors",
]


class EdgeListParseError(ValueError):
    """Malformed edge-list input; message carries the 1-based line number."""


class Graph:
    """Immutable undirected graph.

    ``wgt`` is None when every edge has weight 1.0, which lets unweighted
    algorithms skip a list lookup per edge.  ``weighted_degree[u]`` is the sum
    of edge weights at u (degree itself for unweighted graphs).
    """

    __slots__ = (
        "node_count",
        "edge_count",
        "indptr",
        "nbr",
        "wgt",
        "weighted_degree",
        "labels",
        "label_ids",
    )

    def __init__(self, node_count, edge_count, indptr, nbr, wgt,
                 weighted_degree, labels, label_ids):
        self.node_count = node_count
        self.edge_count = edge_count
        self.indptr = indptr
        self.nbr = nbr
        self.wgt = wgt
        self.weighted_degree = weighted_degree
        self.labels = labels
        self.label_ids = label_ids

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int, float]],
                   nodes: Iterable[int] | None = None) -> "Graph":
        """Build a graph from (label_u, label_v, weight) triples.

        Parallel edges are summed, self-loops dropped with a counted warning.
        ``nodes`` optionally forces extra labels into the graph (they end up
        isolated unless an edge mentions them).
        """
        label_set: set[int] = set(nodes) if nodes is not None else set()
        pair_weight: dict[tuple[int, int], float] = {}
        self_loops = 0
        for u, v, w in edges:
            label_set.add(u)
            label_set.add(v)
            if u == v:
                self_loops += 1
                continue
            key = (u, v) if u < v else (v, u)
            pair_weight[key] = pair_weight.get(key, 0.0) + w
        if self_loops:
            logger.warning("dropped %d self-loop(s)", self_loops)
        if not label_set:
            raise ValueError("empty graph: no nodes and no edges")

        labels = sorted(label_set)
        label_ids = {lb: i for i, lb in enumerate(labels)}
        n = len(labels)

        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for (lu, lv), w in pair_weight.items():
            u = label_ids[lu]
            v = label_ids[lv]
            adj[u].append((v, w))
            adj[v].append((u, w))

        indptr = [0] * (n + 1)
        nbr: list[int] = []
        wgt: list[float] = []
        weighted_degree = [0.0] * n
        all_unit = True
        for u in range(n):
            adj[u].sort()
            total = 0.0
            for v, w in adj[u]:
                nbr.append(v)
                wgt.append(w)
                total += w
                if w != 1.0:
                    all_unit = False
            weighted_degree[u] = total
            indptr[u + 1] = len(nbr)
        return cls(n, len(pair_weight), indptr, nbr,
                   None if all_unit else wgt, weighted_degree,
                   labels, label_ids)

    def degree(self, node: int) -> int:
        """Number of distinct neighbors of an internal node id."""
        return self.indptr[node + 1] - self.indptr[node]

    def neighbor_ids(self, node: int) -> list[int]:
        s = self.indptr[node]
        return self.nbr[s:self.indptr[node + 1]]

    def edge_weight(self, pos: int) -> float:
        return 1.0 if self.wgt is None else self.wgt[pos]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.labels != other.labels or self.indptr != other.indptr:
            return False
        if self.nbr != other.nbr:
            return False
        a = self.wgt if self.wgt is not None else [1.0] * len(self.nbr)
        b = other.wgt if other.wgt is not None else [1.0] * len(other.nbr)
        return a == b

    __hash__ = None  # mutable-by-convention container semantics

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count})"


def neighbors(graph: Graph, node: int) -> list[tuple[int, float]]:
    """Neighbors of ``node`` as (internal id, weight) pairs, ascending by id.

    Raises ValueError for an id outside 0..node_count-1.
    """
    if not isinstance(node, int) or node < 0 or node >= graph.node_count:
        raise ValueError(f"unknown node id {node!r}")
    s = graph.indptr[node]
    e = graph.indptr[node + 1]
    if graph.wgt is None:
        return [(v, 1.0) for v in graph.nbr[s:e]]
    return list(zip(graph.nbr[s:e], graph.wgt[s:e]))


def _parse_label(token: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise EdgeListParseError(
            f"line {lineno}: node label {token!r} is not an integer") from None
    if value < 0:
        raise EdgeListParseError(f"line {lineno}: negative node label {value}")
    return value


def parse_edge_list(stream: Iterable[str]) -> Graph:
    """Parse a whitespace-separated edge list into a Graph.

    Each non-blank, non-comment line is ``u v`` or ``u v w`` with integer
    labels and an optional nonnegative real weight (default 1).  Lines
    starting with '#' are comments.  Duplicate edges are summed and
    self-loops dropped with a warning; parse failures carry the line number.
    """
    edges: list[tuple[int, int, float]] = []
    saw_line = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        saw_line = True
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(
                f"line {lineno}: expected 'u v' or 'u v w', got {len(parts)} fields")
        u = _parse_label(parts[0], lineno)
        v = _parse_label(parts[1], lineno)
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListParseError(
                    f"line {lineno}: weight {parts[2]!r} is not a number") from None
            if math.isnan(w) or math.isinf(w) or w < 0:
                raise EdgeListParseError(
                    f"line {lineno}: weight must be a finite nonnegative number")
        edges.append((u, v, w))
    if not saw_line:
        raise EdgeListParseError("empty input: no edges found")
    return Graph.from_edges(edges)


def load_edge_list(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh)


def edge_lines(graph: Graph) -> Iterator[str]:
    """Render the graph back into edge-list lines.

    Isolated nodes are emitted as self-loop lines so the parser recreates
    them (it registers the labels, then drops the loop).
    """
    for u in range(graph.node_count):
        s = graph.indptr[u]
        e = graph.indptr[u + 1]
        if s == e:
            yield f"{graph.labels[u]} {graph.labels[u]}"
            continue
        for pos in range(s, e):
            v = graph.nbr[pos]
            if u < v:
                w = 1.0 if graph.wgt is None else graph.wgt[pos]
                if w == 1.0:
                    yield f"{graph.labels[u]} {graph.labels[v]}"
                else:
                    yield f"{graph.labels[u]} {graph.labels[v]} {w!r}"


def write_edge_list(graph: Graph, target: IO[str] | str) -> None:
    """Write the graph as an edge list to a path or text stream."""
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8") as fh:
            for line in edge_lines(graph):
                fh.write(line + "\n")
    else:
        for line in edge_lines(graph):
            target.write(line + "\n")
