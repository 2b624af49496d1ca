"""Community growth: overlap pre-check, greedy queue expansion, removal passes.

Expansion pops boundary candidates from a lazy max-heap keyed by the ranking
factor, adds a candidate when its node fitness is strictly positive, and
re-inserts touched neighbors with fresh keys (stale entries are recognized by
key mismatch and skipped).  After any growth, up to ``removal_cap`` passes
drop members whose removal strictly improves the community fitness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from heapq import heapify, heappop, heappush

from .communities import Community, MembershipTable
from .fitness import node_fitness, ranking_factor
from .graph import Graph

logger = logging.getLogger(__name__)

__all__ = [
    "GrowthConfig",
    "GrowthOutcome",
    "eta_fraction",
    "overlap_threshold",
    "overlap_precheck",
    "grow_community",
]


def eta_fraction(eta: float) -> tuple[int, int]:
    """Exact (numerator, denominator) for the merge threshold ratio.

    Goes through the decimal rendering so that eta=0.7 means exactly 7/10
    rather than the nearest binary double, keeping thresholds like
    ceil(0.7 * 10) = 7 free of float artifacts in either direction.
    """
    frac = Fraction(str(eta))
    if not 0 < frac <= 1:
        raise ValueError(f"eta must be in (0, 1], got {eta!r}")
    return frac.numerator, frac.denominator


def overlap_threshold(eta_num: int, eta_den: int, size_a: int, size_b: int) -> int:
    """Shared-node count that triggers a merge: ceil(eta * min(sizes))."""
    m = size_a if size_a < size_b else size_b
    return -((-eta_num * m) // eta_den)


@dataclass(frozen=True)
class GrowthConfig:
    alpha: float
    eta: float = 0.5
    removal_cap: int = 5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if self.removal_cap < 1:
            raise ValueError(f"removal_cap must be >= 1, got {self.removal_cap!r}")
        num, den = eta_fraction(self.eta)
        object.__setattr__(self, "_eta_num", num)
        object.__setattr__(self, "_eta_den", den)


@dataclass(frozen=True)
class GrowthOutcome:
    changed: bool
    needs_merge_check: bool


def overlap_precheck(community: Community, table: MembershipTable,
                     sizes: dict[int, int], config: GrowthConfig) -> bool:
    """True as soon as some other community's co-membership count reaches the
    merge threshold, in which case growing would only deepen an overlap the
    check phase is about to merge away."""
    counts: dict[int, int] = {}
    my_id = community.id
    my_size = len(community.nodes)
    num = config._eta_num
    den = config._eta_den
    for node in community.nodes:
        for cid in table.communities_of(node):
            if cid == my_id:
                continue
            c = counts.get(cid, 0) + 1
            counts[cid] = c
            other_size = sizes.get(cid)
            if other_size is None:
                continue  # community vanished since the registry was built
            if c >= overlap_threshold(num, den, my_size, other_size):
                return True
    return False


def grow_community(graph: Graph, community: Community, table: MembershipTable,
                   config: GrowthConfig, sizes: dict[int, int],
                   _audit_hook=None) -> GrowthOutcome:
    """Grow one community to a local optimum, then prune it.

    ``sizes`` is the phase-start size registry used by the overlap pre-check
    (staleness within a phase is tolerated; merging is re-verified later).
    ``_audit_hook(node, rf, heap)`` is testing instrumentation called at each
    valid queue pop.
    """
    if not community.nodes:
        raise ValueError(f"cannot grow empty community {community.id}")
    if overlap_precheck(community, table, sizes, config):
        return GrowthOutcome(changed=False, needs_merge_check=True)

    alpha = config.alpha
    wdeg = graph.weighted_degree
    indptr = graph.indptr
    nbr = graph.nbr
    boundary = community.boundary
    cid = community.id

    heap: list[tuple[float, int]] = []
    for v, ent in boundary.items():
        din = ent[1]
        if din > 0:
            heap.append((-ranking_factor(din, wdeg[v] - din, alpha), v))
    heapify(heap)

    added_any = False
    while heap:
        neg_key, v = heappop(heap)
        ent = boundary.get(v)
        if ent is None or ent[1] <= 0:
            continue  # absorbed meanwhile, or attached only by zero weight
        rf = ranking_factor(ent[1], wdeg[v] - ent[1], alpha)
        if rf != -neg_key:
            continue  # stale entry; a fresher key is in the heap
        if _audit_hook is not None:
            _audit_hook(v, rf, heap)
        if node_fitness(graph, community, v, alpha) > 0:
            community.add_node(graph, v)
            table.add(v, cid)
            added_any = True
            for pos in range(indptr[v], indptr[v + 1]):
                u = nbr[pos]
                uent = boundary.get(u)
                if uent is not None and uent[1] > 0:
                    din = uent[1]
                    heappush(heap, (-ranking_factor(din, wdeg[u] - din, alpha), u))
        # rejected candidates are dropped; a later addition that raises their
        # d_in re-inserts them via the loop above

    removed_any = False
    if added_any:
        for _ in range(config.removal_cap):
            removed_this_pass = False
            for x in sorted(community.nodes):
                if len(community.nodes) == 1:
                    # fitness of a singleton is >= 0 = fitness of nothing, so
                    # the strict test below can never empty a community; this
                    # guard just makes that explicit
                    break
                if node_fitness(graph, community, x, alpha) < 0:
                    community.remove_node(graph, x)
                    table.remove(x, cid)
                    removed_this_pass = True
                    removed_any = True
            if not removed_this_pass:
                break

    changed = added_any or removed_any
    return GrowthOutcome(changed=changed, needs_merge_check=changed)
