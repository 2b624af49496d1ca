"""Seed selection: singleton starting communities from random draws.

Rule 1 removes a drawn seed and its neighbors from the candidate pool, so no
two seeds are adjacent.  Rule 2 also removes neighbors-of-neighbors, spacing
seeds at least distance 3 apart, which yields fewer starting communities and
therefore less growth work on large graphs.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .communities import Community, Cover
from .graph import Graph

logger = logging.getLogger(__name__)

__all__ = ["SeedConfig", "select_seeds"]

RULE_NEIGHBORS = 1
RULE_NEIGHBORS_OF_NEIGHBORS = 2


@dataclass(frozen=True)
class SeedConfig:
    rule: int = RULE_NEIGHBORS
    rng_seed: int = 0

    def __post_init__(self):
        if self.rule not in (RULE_NEIGHBORS, RULE_NEIGHBORS_OF_NEIGHBORS):
            raise ValueError(f"seed rule must be 1 or 2, got {self.rule!r}")


def select_seeds(graph: Graph, config: SeedConfig) -> Cover:
    """Draw seeds uniformly from nodes with >= 2 distinct neighbors.

    Each draw evicts the seed and its rule-defined neighborhood from the
    candidate pool; the same rng_seed always reproduces the same seed set.
    Returns a cover of singleton communities (empty, with a warning, if no
    node qualifies).
    """
    rng = random.Random(config.rng_seed)
    indptr = graph.indptr
    nbr = graph.nbr

    candidates = [u for u in range(graph.node_count)
                  if indptr[u + 1] - indptr[u] >= 2]
    position = {u: i for i, u in enumerate(candidates)}

    def evict(u: int) -> None:
        i = position.pop(u, None)
        if i is None:
            return
        last = candidates.pop()
        if last != u:
            candidates[i] = last
            position[last] = i

    seeds: list[int] = []
    while candidates:
        n = candidates[rng.randrange(len(candidates))]
        seeds.append(n)
        evict(n)
        for pos in range(indptr[n], indptr[n + 1]):
            v = nbr[pos]
            evict(v)
            if config.rule == RULE_NEIGHBORS_OF_NEIGHBORS:
                for pos2 in range(indptr[v], indptr[v + 1]):
                    evict(nbr[pos2])

    if not seeds:
        logger.warning("no node has 2 or more neighbors; seed cover is empty")

    cover = Cover()
    for cid, n in enumerate(seeds):
        cover.add(Community.from_nodes(graph, {n}, cid))
    return cover
