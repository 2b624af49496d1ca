"""Shared test utilities: random graphs and brute-force oracles."""

import itertools
import random

from mscd.graph import Graph


def random_graph(rng: random.Random, n: int, edge_prob: float,
                 weighted: bool = False) -> Graph:
    """Erdos-Renyi style graph; guarantees every node exists (maybe isolated)."""
    edges = []
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < edge_prob:
            w = float(rng.randint(1, 5)) if weighted else 1.0
            edges.append((u, v, w))
    return Graph.from_edges(edges, nodes=range(n))


def brute_boundary(graph: Graph, node_set) -> set:
    """Non-members adjacent to at least one member, recomputed from scratch."""
    ns = set(node_set)
    out = set()
    for u in ns:
        for pos in range(graph.indptr[u], graph.indptr[u + 1]):
            v = graph.nbr[pos]
            if v not in ns:
                out.add(v)
    return out


def brute_degrees(graph: Graph, node_set) -> tuple[float, float]:
    """Independent (k_in, k_out) recomputation, written differently on purpose."""
    ns = set(node_set)
    k_in = 0.0
    k_out = 0.0
    for u in ns:
        for v, w in zip(graph.nbr[graph.indptr[u]:graph.indptr[u + 1]],
                        (graph.wgt[graph.indptr[u]:graph.indptr[u + 1]]
                         if graph.wgt is not None
                         else [1.0] * (graph.indptr[u + 1] - graph.indptr[u]))):
            if v in ns:
                k_in += w
            else:
                k_out += w
    return k_in, k_out


def triangle() -> Graph:
    return Graph.from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def path(n: int) -> Graph:
    return Graph.from_edges([(i, i + 1, 1.0) for i in range(n - 1)])


def star(leaves: int) -> Graph:
    """Center is node 0, leaves are 1..leaves."""
    return Graph.from_edges([(0, i, 1.0) for i in range(1, leaves + 1)])


def clique(nodes) -> list[tuple[int, int, float]]:
    return [(u, v, 1.0) for u, v in itertools.combinations(nodes, 2)]
