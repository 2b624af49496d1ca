"""Check phase (find overlapping pairs) and merge phase (batched merging).

Pairs are found by counting co-memberships through the membership table with
an early exit per checked community, then merged in waves of id-disjoint
batches; after each wave, pair references to absorbed communities are renamed
to their keeper, self-pairs dropped and duplicates removed, until no pairs
remain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .communities import Community, Cover, MembershipTable
from .graph import Graph
from .growth import eta_fraction, overlap_threshold

logger = logging.getLogger(__name__)

__all__ = [
    "MergePair",
    "find_merge_candidates",
    "partition_disjoint_pairs",
    "execute_merges",
    "dedup_pairs",
]


@dataclass(frozen=True)
class MergePair:
    keep_id: int
    absorb_id: int

    def __post_init__(self):
        if self.keep_id == self.absorb_id:
            raise ValueError(f"self-pair ({self.keep_id}, {self.absorb_id})")

    def key(self) -> tuple[int, int]:
        a, b = self.keep_id, self.absorb_id
        return (a, b) if a < b else (b, a)


def dedup_pairs(pairs) -> list[MergePair]:
    """Drop unordered duplicates, keeping first occurrence order."""
    seen: set[tuple[int, int]] = set()
    out: list[MergePair] = []
    for p in pairs:
        k = p.key()
        if k not in seen:
            seen.add(k)
            out.append(p)
    return out


def find_merge_candidates(check_set, table: MembershipTable, cover: Cover,
                          eta: float) -> list[MergePair]:
    """Scan each community in check_set for a partner sharing enough nodes.

    Shared-node counts are accumulated per co-resident community; the scan of
    a community stops at its first partner reaching ceil(eta * min(sizes)).
    The result is free of unordered duplicates.  Node and membership
    iteration is sorted, so the emitted pairs are deterministic.
    """
    num, den = eta_fraction(eta)
    out: list[MergePair] = []
    seen: set[tuple[int, int]] = set()
    for cid in check_set:
        c = cover.get(cid)
        if c is None:
            logger.debug("check set names missing community %d; skipped", cid)
            continue
        my_size = len(c.nodes)
        counts: dict[int, int] = {}
        partner = None
        for node in sorted(c.nodes):
            for other in sorted(table.communities_of(node)):
                if other == cid:
                    continue
                cnt = counts.get(other, 0) + 1
                counts[other] = cnt
                other_c = cover.get(other)
                if other_c is None:
                    continue
                if cnt >= overlap_threshold(num, den, my_size, len(other_c.nodes)):
                    partner = other
                    break
            if partner is not None:
                break
        if partner is not None:
            pair = MergePair(cid, partner)
            k = pair.key()
            if k not in seen:
                seen.add(k)
                out.append(pair)
    return out


def partition_disjoint_pairs(pairs) -> list[list[MergePair]]:
    """Greedy batches in which no community id appears twice."""
    remaining = list(pairs)
    batches: list[list[MergePair]] = []
    while remaining:
        used: set[int] = set()
        batch: list[MergePair] = []
        rest: list[MergePair] = []
        for p in remaining:
            if p.keep_id in used or p.absorb_id in used:
                rest.append(p)
            else:
                used.add(p.keep_id)
                used.add(p.absorb_id)
                batch.append(p)
        batches.append(batch)
        remaining = rest
    return batches


def execute_merges(graph: Graph, cover: Cover, pairs, table: MembershipTable,
                   keep_larger: bool = True) -> Cover:
    """Merge all pairs (and their renamed descendants) into the cover.

    With keep_larger (default) the bigger community keeps its id (tie: lower
    id), decided per pair at merge time so batch order does not matter.  With
    keep_larger=False the pair's keep_id always survives, matching the
    emission orientation where the checked community absorbs its partner.
    """
    remaining = dedup_pairs(pairs)
    while remaining:
        batches = partition_disjoint_pairs(remaining)
        batch = batches[0]
        remaining = [p for b in batches[1:] for p in b]
        rename: dict[int, int] = {}
        for p in batch:
            keep_id, absorb_id = p.keep_id, p.absorb_id
            keep = cover.get(keep_id)
            absorb = cover.get(absorb_id)
            if keep is None or absorb is None:
                raise RuntimeError(
                    f"merge pair ({keep_id}, {absorb_id}) references a missing "
                    f"community: rename bookkeeping is broken")
            if keep_larger and (len(absorb.nodes), -absorb_id) > (len(keep.nodes), -keep_id):
                keep_id, absorb_id = absorb_id, keep_id
                keep, absorb = absorb, keep
            merged = Community.from_nodes(graph, keep.nodes | absorb.nodes, keep_id)
            cover.communities[keep_id] = merged
            cover.remove(absorb_id)
            for node in absorb.nodes:
                table.remove(node, absorb_id)
                table.add(node, keep_id)
            rename[absorb_id] = keep_id
        if remaining:
            renamed: list[MergePair] = []
            seen: set[tuple[int, int]] = set()
            for p in remaining:
                a = rename.get(p.keep_id, p.keep_id)
                b = rename.get(p.absorb_id, p.absorb_id)
                if a == b:
                    continue  # both sides collapsed into the same community
                key = (a, b) if a < b else (b, a)
                if key in seen:
                    continue
                seen.add(key)
                renamed.append(MergePair(a, b))
            remaining = renamed
    return cover
