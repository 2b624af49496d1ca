"""Local fitness criterion: community fitness, node fitness, candidate ranking.

The scale parameter alpha controls community granularity; larger alpha favors
smaller, denser communities.  All functions here are pure and rely on the
incremental tallies kept by Community, so a node's fitness never requires
copying or rescanning the community.
"""

from __future__ import annotations

from .communities import Community, community_degrees
from .graph import Graph

__all__ = [
    "community_fitness",
    "node_fitness",
    "ranking_factor",
    "cover_quality",
]


def community_fitness(k_in: float, k_out: float, alpha: float) -> float:
    """k_in / (k_in + k_out)^alpha; defined as 0 for a zero-degree community."""
    if k_in < 0 or k_out < 0:
        raise ValueError("degrees must be nonnegative")
    total = k_in + k_out
    if total <= 0:
        return 0.0
    return k_in / total ** alpha


def node_fitness(graph: Graph, community: Community, node: int, alpha: float) -> float:
    """Fitness of the community with the node minus fitness without it.

    For a boundary candidate the "without" term is the current community; for
    a member the "with" term is.  Nodes with no edge into (and no membership
    of) the community are rejected.
    """
    k_in = community.k_in
    k_out = community.k_out
    wd = graph.weighted_degree[node]
    if node in community.nodes:
        win = community.internal[node][1]
        f_with = community_fitness(k_in, k_out, alpha)
        f_without = community_fitness(k_in - 2.0 * win, k_out - wd + 2.0 * win, alpha)
    else:
        ent = community.boundary.get(node)
        if ent is None:
            raise ValueError(
                f"node {node} has no relation to community {community.id}")
        din = ent[1]
        f_with = community_fitness(k_in + 2.0 * din, k_out + wd - 2.0 * din, alpha)
        f_without = community_fitness(k_in, k_out, alpha)
    return f_with - f_without


def ranking_factor(d_in: float, d_out: float, alpha: float) -> float:
    """Queue priority 2*d_in / (d_in + d_out)^alpha for a boundary candidate.

    d_in is the candidate's edge weight into the community, d_out the rest of
    its weighted degree.
    """
    if d_in <= 0:
        raise ValueError("candidate has no edge weight into the community")
    if d_out < 0:
        raise ValueError("d_out must be nonnegative")
    return 2.0 * d_in / (d_in + d_out) ** alpha


def cover_quality(graph: Graph, cover, alpha: float) -> float:
    """Mean community fitness over a cover (a reporting convention).

    Accepts anything iterable over communities; objects carrying k_in/k_out
    caches are read directly, raw node sets are recomputed from the graph.
    """
    total = 0.0
    count = 0
    for c in cover:
        if hasattr(c, "k_in"):
            k_in, k_out = c.k_in, c.k_out
        else:
            k_in, k_out = community_degrees(graph, c)
        total += community_fitness(k_in, k_out, alpha)
        count += 1
    if count == 0:
        raise ValueError("cover_quality of an empty cover")
    return total / count
