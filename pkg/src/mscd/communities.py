"""Community state with incremental degree bookkeeping, membership table, covers.

A ``Community`` tracks, besides its node set, two tallies per adjacent node:

* ``internal[u] = [edge_count, weight]`` for members u, edges to other members
* ``boundary[v] = [edge_count, weight]`` for non-members v, edges into the set

Counts are exact integers, so membership of the boundary set never suffers
float-cancellation artifacts; weights feed the fitness math.  ``k_in`` counts
every internal edge twice so that ``k_in + k_out`` equals the summed weighted
degree of the members.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

from .graph import Graph
from .locks import WriterPriorityRWLock

logger = logging.getLogger(__name__)

__all__ = [
    "Community",
    "MembershipTable",
    "Cover",
    "CoverSnapshot",
    "FrozenCommunity",
    "community_degrees",
    "apply_node_add",
    "apply_node_remove",
    "membership_update",
    "rebuild_membership",
    "read_cover",
    "write_cover",
]


def _check_node_ids(graph: Graph, nodes) -> None:
    for u in nodes:
        if not isinstance(u, int) or u < 0 or u >= graph.node_count:
            raise ValueError(f"unknown node id {u!r}")


def community_degrees(graph: Graph, node_set) -> tuple[float, float]:
    """From-scratch (k_in, k_out) for a node set.

    k_in counts each internal edge twice.  This is the oracle the incremental
    bookkeeping is tested against.
    """
    ns = set(node_set)
    _check_node_ids(graph, ns)
    indptr = graph.indptr
    nbr = graph.nbr
    wgt = graph.wgt
    k_in = 0.0
    k_out = 0.0
    for u in ns:
        for pos in range(indptr[u], indptr[u + 1]):
            w = 1.0 if wgt is None else wgt[pos]
            if nbr[pos] in ns:
                k_in += w
            else:
                k_out += w
    return k_in, k_out


class Community:
    """Node set with incrementally maintained degree tallies."""

    __slots__ = ("id", "nodes", "k_in", "k_out", "internal", "boundary")

    def __init__(self, cid: int):
        self.id = cid
        self.nodes: set[int] = set()
        self.k_in = 0.0
        self.k_out = 0.0
        self.internal: dict[int, list] = {}
        self.boundary: dict[int, list] = {}

    @classmethod
    def from_nodes(cls, graph: Graph, nodes, cid: int) -> "Community":
        """Build a community from scratch in one pass over member adjacency."""
        c = cls(cid)
        node_set = set(nodes)
        _check_node_ids(graph, node_set)
        c.nodes = node_set
        indptr = graph.indptr
        nbr = graph.nbr
        wgt = graph.wgt
        wdeg = graph.weighted_degree
        internal = c.internal
        boundary = c.boundary
        k_in = 0.0
        k_out = 0.0
        for u in node_set:
            win = 0.0
            n_in = 0
            for pos in range(indptr[u], indptr[u + 1]):
                v = nbr[pos]
                w = 1.0 if wgt is None else wgt[pos]
                if v in node_set:
                    win += w
                    n_in += 1
                else:
                    ent = boundary.get(v)
                    if ent is None:
                        boundary[v] = [1, w]
                    else:
                        ent[0] += 1
                        ent[1] += w
            internal[u] = [n_in, win]
            k_in += win
            k_out += wdeg[u] - win
        c.k_in = k_in
        c.k_out = k_out
        return c

    @property
    def boundary_neighbors(self):
        """Non-members adjacent to at least one member (a set-like view)."""
        return self.boundary.keys()

    def sorted_nodes(self) -> list[int]:
        return sorted(self.nodes)

    def add_node(self, graph: Graph, node: int) -> None:
        """Add an adjacent (or first) node, updating tallies incrementally."""
        if node in self.nodes:
            raise ValueError(f"node {node} is already a member of community {self.id}")
        if self.nodes and node not in self.boundary:
            raise ValueError(
                f"node {node} is not adjacent to community {self.id}")
        indptr = graph.indptr
        nbr = graph.nbr
        wgt = graph.wgt
        members = self.nodes
        internal = self.internal
        boundary = self.boundary
        win = 0.0
        n_in = 0
        for pos in range(indptr[node], indptr[node + 1]):
            v = nbr[pos]
            w = 1.0 if wgt is None else wgt[pos]
            if v in members:
                ent = internal[v]
                ent[0] += 1
                ent[1] += w
                win += w
                n_in += 1
            else:
                ent = boundary.get(v)
                if ent is None:
                    boundary[v] = [1, w]
                else:
                    ent[0] += 1
                    ent[1] += w
        members.add(node)
        internal[node] = [n_in, win]
        boundary.pop(node, None)
        self.k_in += 2.0 * win
        self.k_out += graph.weighted_degree[node] - 2.0 * win

    def remove_node(self, graph: Graph, node: int) -> None:
        """Exact inverse of add_node.  Refuses to empty the community."""
        if node not in self.nodes:
            raise ValueError(f"node {node} is not a member of community {self.id}")
        if len(self.nodes) == 1:
            raise ValueError(
                f"removing node {node} would empty community {self.id}; dissolve instead")
        indptr = graph.indptr
        nbr = graph.nbr
        wgt = graph.wgt
        self.nodes.discard(node)
        members = self.nodes
        internal = self.internal
        boundary = self.boundary
        ent = internal.pop(node)
        win = ent[1]
        for pos in range(indptr[node], indptr[node + 1]):
            v = nbr[pos]
            w = 1.0 if wgt is None else wgt[pos]
            if v in members:
                iv = internal[v]
                iv[0] -= 1
                iv[1] -= w
            else:
                bv = boundary[v]
                if bv[0] == 1:
                    del boundary[v]
                else:
                    bv[0] -= 1
                    bv[1] -= w
        if ent[0] > 0:
            # the departed node still touches the community from outside
            boundary[node] = ent
        self.k_in -= 2.0 * win
        self.k_out -= graph.weighted_degree[node] - 2.0 * win

    def _export_state(self):
        return (self.nodes, self.k_in, self.k_out, self.internal, self.boundary)

    def _restore_state(self, state) -> None:
        self.nodes, self.k_in, self.k_out, self.internal, self.boundary = state

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        return node in self.nodes

    def __eq__(self, other):
        if not isinstance(other, Community):
            return NotImplemented
        return (self.id == other.id and self.nodes == other.nodes
                and self.k_in == other.k_in and self.k_out == other.k_out
                and self.internal == other.internal
                and self.boundary == other.boundary)

    __hash__ = None

    def __repr__(self):
        return (f"Community(id={self.id}, size={len(self.nodes)}, "
                f"k_in={self.k_in:g}, k_out={self.k_out:g})")


def apply_node_add(community: Community, graph: Graph, node: int) -> Community:
    community.add_node(graph, node)
    return community


def apply_node_remove(community: Community, graph: Graph, node: int) -> Community:
    community.remove_node(graph, node)
    return community


class MembershipTable:
    """Per-node sets of community ids.

    With ``thread_safe=True`` every node's set is guarded by its own
    writer-priority readers/writer lock, so concurrent growth workers can
    read and write disjoint nodes without a global bottleneck and a snapshot
    of one node's set is never torn.  ``thread_safe=False`` drops the locks
    for single-threaded orchestration.
    """

    __slots__ = ("node_count", "_sets", "_locks")

    def __init__(self, node_count: int, thread_safe: bool = True):
        if node_count < 0:
            raise ValueError("node_count must be nonnegative")
        self.node_count = node_count
        self._sets: list[set[int]] = [set() for _ in range(node_count)]
        self._locks = ([WriterPriorityRWLock() for _ in range(node_count)]
                       if thread_safe else None)

    def communities_of(self, node: int) -> tuple[int, ...]:
        """Atomic snapshot of one node's membership set."""
        locks = self._locks
        if locks is None:
            return tuple(self._sets[node])
        lock = locks[node]
        lock.acquire_read()
        try:
            return tuple(self._sets[node])
        finally:
            lock.release_read()

    def add(self, node: int, community_id: int) -> None:
        locks = self._locks
        if locks is None:
            self._sets[node].add(community_id)
            return
        lock = locks[node]
        lock.acquire_write()
        try:
            self._sets[node].add(community_id)
        finally:
            lock.release_write()

    def remove(self, node: int, community_id: int) -> None:
        locks = self._locks
        if locks is None:
            self._sets[node].discard(community_id)
            return
        lock = locks[node]
        lock.acquire_write()
        try:
            self._sets[node].discard(community_id)
        finally:
            lock.release_write()

    def fill_from(self, cover: "Cover") -> None:
        """Reset to exactly the cover's memberships.

        Phase-boundary operation: must not run concurrently with any other
        access (the per-node locks are bypassed for speed).
        """
        for s in self._sets:
            s.clear()
        for community in cover:
            cid = community.id
            sets = self._sets
            for node in community.nodes:
                sets[node].add(cid)

    def as_dict(self) -> dict[int, set[int]]:
        """Nonempty membership sets, for inspection and tests."""
        return {n: set(s) for n, s in enumerate(self._sets) if s}


def membership_update(table: MembershipTable, node: int, community_id: int,
                      add_or_remove: str) -> None:
    """Apply one atomic membership edit ('add' or 'remove'); idempotent."""
    if add_or_remove == "add":
        table.add(node, community_id)
    elif add_or_remove == "remove":
        table.remove(node, community_id)
    else:
        raise ValueError(f"add_or_remove must be 'add' or 'remove', got {add_or_remove!r}")


class Cover:
    """Mutable set of communities keyed by id, tagged with its scale."""

    def __init__(self, alpha: float | None = None):
        self.alpha = alpha
        self.communities: dict[int, Community] = {}

    def add(self, community: Community) -> None:
        if community.id in self.communities:
            raise ValueError(f"duplicate community id {community.id}")
        self.communities[community.id] = community

    def remove(self, community_id: int) -> None:
        del self.communities[community_id]

    def get(self, community_id: int) -> Community | None:
        return self.communities.get(community_id)

    @classmethod
    def from_node_sets(cls, graph: Graph, node_sets: Iterable,
                       alpha: float | None = None) -> "Cover":
        """Build a cover from raw node sets; identical sets are collapsed."""
        cover = cls(alpha)
        seen: set[frozenset] = set()
        cid = 0
        for ns in node_sets:
            key = frozenset(ns)
            if not key:
                raise ValueError("empty community in cover input")
            if key in seen:
                continue
            seen.add(key)
            cover.add(Community.from_nodes(graph, key, cid))
            cid += 1
        return cover

    def node_sets(self) -> list[set[int]]:
        return [set(c.nodes) for c in self]

    def node_union(self) -> set[int]:
        out: set[int] = set()
        for c in self:
            out |= c.nodes
        return out

    def snapshot(self, alpha: float | None = None) -> "CoverSnapshot":
        frozen = tuple(
            FrozenCommunity(c.id, tuple(sorted(c.nodes)), c.k_in, c.k_out)
            for c in self)
        a = self.alpha if alpha is None else alpha
        return CoverSnapshot(a, frozen)

    def __len__(self):
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities.values())

    def __repr__(self):
        return f"Cover(alpha={self.alpha}, communities={len(self.communities)})"


class FrozenCommunity(NamedTuple):
    id: int
    nodes: tuple[int, ...]
    k_in: float
    k_out: float


@dataclass(frozen=True)
class CoverSnapshot:
    """Immutable deep copy of a cover, as stored in per-scale results."""

    alpha: float | None
    communities: tuple[FrozenCommunity, ...]

    @property
    def community_count(self) -> int:
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    def node_sets(self) -> list[set[int]]:
        return [set(c.nodes) for c in self.communities]

    def node_union(self) -> set[int]:
        out: set[int] = set()
        for c in self.communities:
            out.update(c.nodes)
        return out


def rebuild_membership(cover, node_count: int | None = None,
                       thread_safe: bool = True) -> MembershipTable:
    """Fresh table where node n maps to exactly the ids of covers containing it.

    ``cover`` may be a Cover or any iterable of communities.  When
    ``node_count`` is omitted it is inferred from the largest node seen.
    """
    communities = list(cover)
    if node_count is None:
        top = -1
        for c in communities:
            for n in c.nodes:
                if n > top:
                    top = n
        node_count = top + 1
    table = MembershipTable(node_count, thread_safe=thread_safe)
    for c in communities:
        for n in c.nodes:
            table._sets[n].add(c.id)
    return table


def write_cover(target: IO[str] | str, node_sets: Iterable, labels=None) -> None:
    """Write communities one per line, ascending labels, ascending line order."""
    rows = []
    for ns in node_sets:
        if labels is None:
            rows.append(sorted(ns))
        else:
            rows.append(sorted(labels[n] for n in ns))
    rows.sort()
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(" ".join(str(x) for x in row) + "\n")
    else:
        for row in rows:
            target.write(" ".join(str(x) for x in row) + "\n")


def read_cover(source: IO[str] | str | Iterable[str]) -> list[list[int]]:
    """Parse a cover file into lists of node labels (one list per community)."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            return read_cover(fh)
    out: list[list[int]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        row: list[int] = []
        seen: set[int] = set()
        for tok in line.split():
            try:
                label = int(tok)
            except ValueError:
                raise ValueError(
                    f"cover line {lineno}: label {tok!r} is not an integer") from None
            if label < 0:
                raise ValueError(f"cover line {lineno}: negative label {label}")
            if label in seen:
                raise ValueError(f"cover line {lineno}: duplicate label {label}")
            seen.add(label)
            row.append(label)
        out.append(row)
    return out
