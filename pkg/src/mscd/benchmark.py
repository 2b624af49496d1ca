"""Two-level planted-community benchmark generator plus mixing measurement.

Nodes are grouped into equal micro communities, which in turn are grouped
into equal macro communities.  Each node gets a target degree near the
configured average (uniform within +/-20%), split into three stub tiers:
inside its micro community, inside its macro community but outside its
micro, and outside its macro.  Stubs are matched uniformly at random within
each tier; duplicate pairs and self pairs are rejected and retried, and a
final rewiring pass converts remaining shortfalls by splitting existing
edges of the same tier.  The fractions mu2 (edges leaving the micro) and
mu1 (edges leaving the macro) are therefore realized approximately; use
measure_mixing to read the exact outcome.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from typing import IO

from .graph import Graph

logger = logging.getLogger(__name__)

__all__ = [
    "BenchmarkConfig",
    "generate_hierarchical",
    "measure_mixing",
    "round_half_up",
    "write_benchmark_manifest",
]

# Retry rounds for shuffle-and-pair matching, and probe attempts per
# leftover stub pair in the rewiring pass.
MATCH_ROUNDS = 30
REWIRE_PROBES = 100


def round_half_up(x: float) -> int:
    """Round with .5 going up, so stub tiers split a degree predictably."""
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Generator settings; validation happens at construction time."""

    n: int
    micro_size: int
    micros_per_macro: int
    avg_degree: float
    mu1: float
    mu2: float
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n!r}")
        if self.micro_size < 2:
            raise ValueError(
                f"micro_size must be >= 2, got {self.micro_size!r}")
        if self.micros_per_macro < 1:
            raise ValueError(
                f"micros_per_macro must be >= 1, got {self.micros_per_macro!r}")
        if not self.avg_degree > 0:
            raise ValueError(
                f"avg_degree must be positive, got {self.avg_degree!r}")
        if not 0 <= self.mu1 <= self.mu2 < 1:
            raise ValueError(
                f"need 0 <= mu1 <= mu2 < 1, got mu1={self.mu1!r} "
                f"mu2={self.mu2!r}")
        if self.n % self.macro_size:
            raise ValueError(
                f"micro_size * micros_per_macro = {self.macro_size} must "
                f"divide n = {self.n}")
        deg_cap = round_half_up(1.2 * self.avg_degree)
        if round_half_up((1 - self.mu2) * deg_cap) > self.micro_size - 1:
            raise ValueError(
                "intra-community stubs cannot fit in a simple graph: "
                f"up to {round_half_up((1 - self.mu2) * deg_cap)} neighbors "
                f"inside a community of {self.micro_size}; use larger "
                "communities or a lower average degree")
        if self.mu2 > self.mu1 and self.micros_per_macro < 2:
            raise ValueError(
                "mu2 > mu1 needs at least two micro communities per macro")
        if self.mu1 > 0 and self.n == self.macro_size:
            raise ValueError("mu1 > 0 needs at least two macro communities")

    @property
    def macro_size(self) -> int:
        return self.micro_size * self.micros_per_macro

    @property
    def micro_count(self) -> int:
        return self.n // self.micro_size

    @property
    def macro_count(self) -> int:
        return self.n // self.macro_size


def _ordered(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _match_stubs(rng, stubs, valid_pair, existing):
    """Shuffle-and-pair matching with rejection retries.

    Returns (edges, leftover_stubs); edges are recorded in `existing` so no
    duplicate pair is ever produced across tiers.
    """
    pool = list(stubs)
    edges = []
    for _ in range(MATCH_ROUNDS):
        if len(pool) < 2:
            break
        before = len(pool)
        rng.shuffle(pool)
        rejected = []
        if len(pool) % 2:
            rejected.append(pool.pop())
        for i in range(0, len(pool), 2):
            u, v = pool[i], pool[i + 1]
            key = _ordered(u, v)
            if u == v or key in existing or not valid_pair(u, v):
                rejected.append(u)
                rejected.append(v)
            else:
                existing.add(key)
                edges.append(key)
        pool = rejected
        if len(pool) == before:
            break
    return edges, pool


def _rewire_repair(rng, leftover, pool_edges, valid_pair, existing):
    """One pass over leftover stubs: pair directly, else split a pool edge.

    Splitting (a, b) into (u, a) and (v, b) raises the degrees of the two
    shortfall nodes u and v by one each while leaving a and b untouched.
    Returns the stubs that could not be placed.
    """
    rng.shuffle(leftover)
    unmatched = []
    while len(leftover) >= 2:
        u = leftover.pop()
        v = leftover.pop()
        key = _ordered(u, v)
        if u != v and key not in existing and valid_pair(u, v):
            existing.add(key)
            pool_edges.append(key)
            continue
        placed = False
        if pool_edges:
            for _ in range(REWIRE_PROBES):
                idx = rng.randrange(len(pool_edges))
                a, b = pool_edges[idx]
                if rng.random() < 0.5:
                    a, b = b, a
                k1 = _ordered(u, a)
                k2 = _ordered(v, b)
                if (u != a and v != b and k1 != k2
                        and k1 not in existing and k2 not in existing
                        and valid_pair(u, a) and valid_pair(v, b)):
                    existing.remove(_ordered(a, b))
                    pool_edges[idx] = pool_edges[-1]
                    pool_edges.pop()
                    existing.add(k1)
                    existing.add(k2)
                    pool_edges.append(k1)
                    pool_edges.append(k2)
                    placed = True
                    break
        if not placed:
            unmatched.append(u)
            unmatched.append(v)
    unmatched.extend(leftover)
    return unmatched


def _run_pools(rng, pools, valid_pair, existing, tier_name):
    """Match every stub pool of one tier, with repair and a drop budget."""
    edges = []
    dropped = 0
    total = 0
    for stubs in pools:
        total += len(stubs)
        pool_edges, leftover = _match_stubs(rng, stubs, valid_pair, existing)
        leftover = _rewire_repair(rng, leftover, pool_edges, valid_pair,
                                  existing)
        edges.extend(pool_edges)
        dropped += len(leftover)
    if dropped > 0.02 * total + 2:
        raise ValueError(
            f"stub matching infeasible in the {tier_name} tier "
            f"({dropped} of {total} stubs unplaced after repair); use larger "
            "communities or a lower average degree")
    if dropped:
        logger.debug("%s tier dropped %d of %d stubs", tier_name, dropped,
                     total)
    return edges


def generate_hierarchical(config: BenchmarkConfig):
    """Build the two-level network; returns (graph, micro_cover, macro_cover).

    Covers are lists of sorted node-id lists, exact partitions by
    construction: micro community c holds nodes [c*s, (c+1)*s).
    """
    rng = random.Random(config.rng_seed)
    n = config.n
    micro_of = [u // config.micro_size for u in range(n)]
    macro_of = [u // config.macro_size for u in range(n)]

    intra_micro = [0] * n
    intra_macro = [0] * n
    external = [0] * n
    for u in range(n):
        deg = max(1, round_half_up(rng.uniform(0.8, 1.2) * config.avg_degree))
        im = min(round_half_up((1 - config.mu2) * deg), deg)
        imac = min(round_half_up((config.mu2 - config.mu1) * deg), deg - im)
        intra_micro[u] = im
        intra_macro[u] = imac
        external[u] = deg - im - imac

    existing: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []

    micro_pools = []
    for c in range(config.micro_count):
        base = c * config.micro_size
        stubs = []
        for u in range(base, base + config.micro_size):
            stubs.extend([u] * intra_micro[u])
        micro_pools.append(stubs)
    edges += _run_pools(rng, micro_pools, lambda a, b: True, existing,
                        "intra-micro")

    macro_pools = []
    for c in range(config.macro_count):
        base = c * config.macro_size
        stubs = []
        for u in range(base, base + config.macro_size):
            stubs.extend([u] * intra_macro[u])
        macro_pools.append(stubs)
    edges += _run_pools(rng, macro_pools,
                        lambda a, b: micro_of[a] != micro_of[b], existing,
                        "intra-macro")

    external_pool = []
    for u in range(n):
        external_pool.extend([u] * external[u])
    edges += _run_pools(rng, [external_pool],
                        lambda a, b: macro_of[a] != macro_of[b], existing,
                        "external")

    graph = Graph.from_edges(((u, v, 1.0) for u, v in edges), nodes=range(n))
    micro_cover = [list(range(c * config.micro_size,
                              (c + 1) * config.micro_size))
                   for c in range(config.micro_count)]
    macro_cover = [list(range(c * config.macro_size,
                              (c + 1) * config.macro_size))
                   for c in range(config.macro_count)]
    return graph, micro_cover, macro_cover


def measure_mixing(graph: Graph, cover) -> float:
    """Fraction of edge weight leaving the cover's communities.

    The cover must partition the nodes; both endpoints of every edge then
    have a well-defined owner, and the result is (sum over nodes of external
    edge weight) / (sum of all weighted degrees).
    """
    owner = [-1] * graph.node_count
    for ci, nodes in enumerate(cover):
        for v in nodes:
            if not 0 <= v < graph.node_count:
                raise ValueError(
                    f"cover mentions node {v}, outside the graph")
            if owner[v] != -1:
                raise ValueError(
                    f"node {v} appears in more than one community; "
                    "cover must partition the nodes")
            owner[v] = ci
    missing = owner.count(-1)
    if missing:
        raise ValueError(
            f"{missing} nodes belong to no community; cover must partition "
            "the nodes")
    indptr = graph.indptr
    nbr = graph.nbr
    wgt = graph.wgt
    external = 0.0
    total = 0.0
    for u in range(graph.node_count):
        for i in range(indptr[u], indptr[u + 1]):
            w = 1.0 if wgt is None else wgt[i]
            total += w
            if owner[u] != owner[nbr[i]]:
                external += w
    if total == 0:
        raise ValueError("graph has no edges, mixing is undefined")
    return external / total


def write_benchmark_manifest(target: IO[str] | str, config: BenchmarkConfig,
                             realized_mu1: float, realized_mu2: float,
                             edge_count: int) -> None:
    """Key-value text file recording the settings and the realized mixing."""
    if isinstance(target, str):
        with open(target, "w") as fh:
            write_benchmark_manifest(fh, config, realized_mu1, realized_mu2,
                                     edge_count)
        return
    rows = [
        ("n", config.n),
        ("micro_size", config.micro_size),
        ("micros_per_macro", config.micros_per_macro),
        ("avg_degree", repr(config.avg_degree)),
        ("mu1", repr(config.mu1)),
        ("mu2", repr(config.mu2)),
        ("rng_seed", config.rng_seed),
        ("edge_count", edge_count),
        ("realized_mu1", repr(realized_mu1)),
        ("realized_mu2", repr(realized_mu2)),
    ]
    for key, value in rows:
        target.write(f"{key} = {value}\n")
