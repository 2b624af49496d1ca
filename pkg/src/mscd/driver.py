"""Multi-scale sweep driver: grow/check/merge rounds swept over scale values.

For every scale value alpha (visited fine to coarse, so strictly decreasing)
the driver repeats three phases until the cover settles: grow each community
to a local fitness optimum, collect the communities whose overlaps warrant a
merge check, and execute the merges in disjoint batches.  The settled cover
is snapshot into a ScaleResult and carried into the next scale as its
starting point.

Growth and check work can be spread over forked worker processes; the parent
applies the returned community states between phases.  With one worker the
whole sweep runs serially, which is the byte-reproducible mode.
"""

from __future__ import annotations

import csv
import logging
import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field
from typing import IO, Sequence

from .communities import Cover, CoverSnapshot, rebuild_membership, write_cover
from .fitness import cover_quality
from .graph import Graph
from .growth import GrowthConfig, grow_community
from .merging import dedup_pairs, execute_merges, find_merge_candidates
from .seeding import SeedConfig, select_seeds

logger = logging.getLogger(__name__)

__all__ = [
    "CSV_COLUMNS",
    "DriverConfig",
    "MEGA_COMMUNITY_FLAG",
    "STABLE_RUN_FLAG",
    "THREADS_ENV_VAR",
    "ScaleResult",
    "detect_multiscale",
    "resolve_thread_count",
    "sample_scales",
    "scale_node_count",
    "stability_flags",
    "write_node_list",
    "write_scale_covers",
    "write_scale_csv",
]

THREADS_ENV_VAR = "MSCD_THREADS"

CSV_COLUMNS = ("alpha", "community_count", "Q", "phase_rounds",
               "wall_time_ms", "unassigned_nodes")

MEGA_COMMUNITY_FLAG = "mega-community (discardable)"
STABLE_RUN_FLAG = "stable-run member"

# A lone community holding at least this fraction of the nodes is degenerate.
MEGA_SPAN_FRACTION = 0.95


def sample_scales(low: float, high: float, count: int) -> list[float]:
    """Scale ladder from high down to low, crowding values near low.

    value_i = low + (high - low) * (1 - log(i)/log(count)) for i = 1..count.
    Both endpoints are returned exactly; the sequence is strictly decreasing.
    """
    if count < 2:
        raise ValueError(
            f"count must be >= 2 so both endpoints appear, got {count!r}")
    if not 0 < low < high:
        raise ValueError(f"need 0 < low < high, got low={low!r} high={high!r}")
    span = high - low
    denom = math.log(count)
    inner = [low + span * (1.0 - math.log(i) / denom) for i in range(2, count)]
    return [high] + inner + [low]


@dataclass(frozen=True)
class DriverConfig:
    """Settings for one full multi-scale run.

    threads=0 resolves to the environment override or the core count at run
    time.  initial_cover (a sequence of node-id collections) replaces the
    random seeding when given.
    """

    scales: Sequence[float]
    eta: float = 0.5
    removal_cap: int = 5
    threads: int = 0
    max_phase_rounds: int = 100
    seed_config: SeedConfig = field(default_factory=SeedConfig)
    initial_cover: Sequence | None = None
    keep_larger_on_merge: bool = True

    def __post_init__(self):
        scales = tuple(float(a) for a in self.scales)
        if not scales:
            raise ValueError("scales must not be empty")
        for a in scales:
            if not a > 0:
                raise ValueError(f"scales must be positive, got {a!r}")
        for a, b in zip(scales, scales[1:]):
            if not b < a:
                raise ValueError(
                    "scales must be strictly decreasing (fine to coarse), "
                    f"got {a!r} before {b!r}")
        object.__setattr__(self, "scales", scales)
        # GrowthConfig re-validates eta and removal_cap, so bad values fail
        # here instead of mid-sweep.
        GrowthConfig(alpha=scales[0], eta=self.eta,
                     removal_cap=self.removal_cap)
        if self.threads < 0:
            raise ValueError(
                f"threads must be >= 0 (0 means auto), got {self.threads!r}")
        if self.max_phase_rounds < 1:
            raise ValueError(
                f"max_phase_rounds must be >= 1, got {self.max_phase_rounds!r}")
        if self.initial_cover is not None:
            sets = tuple(frozenset(ns) for ns in self.initial_cover)
            object.__setattr__(self, "initial_cover", sets)


@dataclass(frozen=True)
class ScaleResult:
    """Frozen outcome of one scale: the cover plus its summary numbers."""

    alpha: float
    cover: CoverSnapshot
    quality: float
    community_count: int
    phase_rounds: int
    wall_time: float
    unassigned_nodes: int


def resolve_thread_count(requested: int = 0) -> int:
    """Worker count: explicit request, else env override, else core count."""
    if requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV_VAR, env)
        else:
            if value > 0:
                return value
            logger.warning("ignoring non-positive %s=%r", THREADS_ENV_VAR, env)
    return os.cpu_count() or 1


def detect_multiscale(graph: Graph, config: DriverConfig) -> list[ScaleResult]:
    """Run the full sweep and return one ScaleResult per configured scale."""
    if graph.node_count == 0:
        raise ValueError("graph has no nodes")
    workers = resolve_thread_count(config.threads)
    if workers > 1 and not _fork_available():
        logger.warning(
            "worker processes need the fork start method; running serially")
        workers = 1

    if config.initial_cover is not None:
        cover = Cover.from_node_sets(graph, config.initial_cover,
                                     alpha=config.scales[0])
    else:
        cover = select_seeds(graph, config.seed_config)
        cover.alpha = config.scales[0]
    if len(cover) == 0:
        raise ValueError(
            "starting cover is empty (no node qualifies as a seed); pass "
            "initial_cover to start from explicit communities")

    results: list[ScaleResult] = []
    for alpha in config.scales:
        start = time.perf_counter()
        cover.alpha = alpha
        grow_cfg = GrowthConfig(alpha=alpha, eta=config.eta,
                                removal_cap=config.removal_cap)
        rounds = 0
        while True:
            rounds += 1
            changed = _phase_round(graph, cover, grow_cfg, config, workers)
            if not changed:
                break
            if rounds >= config.max_phase_rounds:
                logger.warning(
                    "scale %g: cover still changing after %d rounds; moving on",
                    alpha, rounds)
                break
        wall = time.perf_counter() - start
        results.append(ScaleResult(
            alpha=alpha,
            cover=cover.snapshot(alpha),
            quality=cover_quality(graph, cover, alpha),
            community_count=len(cover),
            phase_rounds=rounds,
            wall_time=wall,
            unassigned_nodes=graph.node_count - len(cover.node_union()),
        ))
    return results


def _phase_round(graph: Graph, cover: Cover, grow_cfg: GrowthConfig,
                 config: DriverConfig, workers: int) -> bool:
    """One grow/check/merge round; True if the cover changed at all."""
    table = rebuild_membership(cover, graph.node_count, thread_safe=False)
    sizes = {c.id: len(c.nodes) for c in cover}
    order = sorted(cover.communities)

    if workers > 1 and len(order) > 1:
        grew, check_ids, table = _grow_parallel(
            graph, cover, table, grow_cfg, sizes, order, workers)
    else:
        grew = False
        check_ids = []
        for cid in order:
            outcome = grow_community(graph, cover.get(cid), table, grow_cfg,
                                     sizes)
            grew = grew or outcome.changed
            if outcome.needs_merge_check:
                check_ids.append(cid)

    if workers > 1 and len(check_ids) > 1:
        pairs = _check_parallel(graph, cover, table, config.eta, check_ids,
                                workers)
    else:
        pairs = find_merge_candidates(check_ids, table, cover, config.eta)
    if pairs:
        execute_merges(graph, cover, pairs, table,
                       keep_larger=config.keep_larger_on_merge)
    return grew or bool(pairs)


# Worker-side context, set in the parent right before the fork so children
# inherit it by memory copy instead of pickling.
_WORK = None


def _fork_available() -> bool:
    return "fork" in multiprocessing.get_all_start_methods()


def _contiguous_chunks(seq: list, parts: int) -> list[list]:
    """Split seq into at most `parts` contiguous, near-equal chunks."""
    parts = max(1, min(parts, len(seq)))
    size, extra = divmod(len(seq), parts)
    chunks = []
    start = 0
    for i in range(parts):
        stop = start + size + (1 if i < extra else 0)
        chunks.append(seq[start:stop])
        start = stop
    return chunks


def _grow_chunk(chunk):
    graph, cover, table, grow_cfg, sizes, _ = _WORK
    changed_states = []
    check_local = []
    for cid in chunk:
        community = cover.get(cid)
        outcome = grow_community(graph, community, table, grow_cfg, sizes)
        if outcome.changed:
            changed_states.append((cid, community._export_state()))
        if outcome.needs_merge_check:
            check_local.append(cid)
    return changed_states, check_local


def _check_chunk(chunk):
    graph, cover, table, _, _, eta = _WORK
    return find_merge_candidates(chunk, table, cover, eta)


def _run_pool(func, chunks, workers):
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=min(workers, len(chunks))) as pool:
        return pool.map(func, chunks)


def _grow_parallel(graph, cover, table, grow_cfg, sizes, order, workers):
    """Grow chunks of communities in forked workers, then reconcile.

    Each worker mutates its private copy of the cover and table; the parent
    adopts the returned community states and rebuilds the table, so within a
    round workers do not observe each other's growth.
    """
    global _WORK
    chunks = _contiguous_chunks(order, workers)
    _WORK = (graph, cover, table, grow_cfg, sizes, None)
    try:
        parts = _run_pool(_grow_chunk, chunks, workers)
    finally:
        _WORK = None
    grew = False
    check_ids = []
    for changed_states, check_local in parts:
        for cid, state in changed_states:
            cover.get(cid)._restore_state(state)
            grew = True
        check_ids.extend(check_local)
    if grew:
        table = rebuild_membership(cover, graph.node_count, thread_safe=False)
    return grew, sorted(set(check_ids)), table


def _check_parallel(graph, cover, table, eta, check_ids, workers):
    global _WORK
    chunks = _contiguous_chunks(check_ids, workers)
    _WORK = (graph, cover, table, None, None, eta)
    try:
        parts = _run_pool(_check_chunk, chunks, workers)
    finally:
        _WORK = None
    return dedup_pairs([pair for part in parts for pair in part])


def scale_node_count(result: ScaleResult) -> int:
    """Node-universe size recovered from a result (covered plus unassigned)."""
    return len(result.cover.node_union()) + result.unassigned_nodes


def stability_flags(results: Sequence[ScaleResult]) -> list[list[str]]:
    """Per-scale annotation lists, aligned with `results`.

    A lone community spanning at least 95% of the nodes gets the
    mega-community flag; every member of a maximal run of two or more equal
    community counts gets the stable-run flag.
    """
    if not results:
        raise ValueError("results must not be empty")
    flags: list[list[str]] = [[] for _ in results]
    for i, result in enumerate(results):
        if result.community_count == 1:
            n = scale_node_count(result)
            span = len(result.cover.communities[0].nodes)
            if n > 0 and span >= MEGA_SPAN_FRACTION * n:
                flags[i].append(MEGA_COMMUNITY_FLAG)
    counts = [result.community_count for result in results]
    i = 0
    while i < len(counts):
        j = i
        while j + 1 < len(counts) and counts[j + 1] == counts[i]:
            j += 1
        if j > i:
            for k in range(i, j + 1):
                flags[k].append(STABLE_RUN_FLAG)
        i = j + 1
    return flags


def write_scale_csv(target: IO[str] | str, results: Sequence[ScaleResult],
                    zero_timings: bool = False) -> None:
    """Write one CSV row per scale.

    zero_timings pins the wall_time_ms column to 0.000 so that two identical
    runs emit identical bytes.
    """
    if isinstance(target, str):
        with open(target, "w", newline="") as fh:
            write_scale_csv(fh, results, zero_timings)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        ms = 0.0 if zero_timings else r.wall_time * 1000.0
        writer.writerow([repr(r.alpha), r.community_count, repr(r.quality),
                         r.phase_rounds, f"{ms:.3f}", r.unassigned_nodes])


def write_scale_covers(out_dir: str, results: Sequence[ScaleResult],
                       labels=None) -> list[str]:
    """Write cover_<iii>.txt per scale into out_dir; returns the paths."""
    paths = []
    for i, result in enumerate(results):
        path = os.path.join(out_dir, f"cover_{i:03d}.txt")
        write_cover(path, result.cover.node_sets(), labels=labels)
        paths.append(path)
    return paths


def write_node_list(target: IO[str] | str, graph: Graph) -> None:
    """One node label per line; records the universe including isolated nodes."""
    if isinstance(target, str):
        with open(target, "w") as fh:
            write_node_list(fh, graph)
        return
    for label in graph.labels:
        target.write(f"{label}\n")
