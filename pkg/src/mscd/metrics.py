"""Cover-comparison metrics: overlapping NMI plus windowed stability series.

Each community is treated as a binary membership indicator over the node
universe.  For a community X_k against a cover Y the normalized conditional
entropy is min_l H(X_k|Y_l)/H(X_k) over the communities of Y whose pairing
passes the qualification test h(P11)+h(P00) >= h(P01)+h(P10); if every
pairing fails, the term stays at its unmatched worst of 1.  The score is
NMI(X, Y) = 1 - (<H(X|Y)>_norm + <H(Y|X)>_norm) / 2, which lands in [0, 1]
and is symmetric.

All entropy terms use base-2 logarithms with 0*log(0) := 0, and every
probability is an integer count divided by the universe size n (never
1 - p, which would break the exact identity NMI(X, X) = 1).  Nodes assigned
to no community at some scale simply have all-zero indicator rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "NmiReport",
    "build_nmi_report",
    "nmi_csv_columns",
    "overlapping_nmi",
    "reference_nmi",
    "windowed_nmi",
]


def _as_node_sets(cover) -> list[frozenset]:
    """Accept a Cover/CoverSnapshot, a ScaleResult, or raw node collections."""
    if hasattr(cover, "node_sets"):
        sets = cover.node_sets()
    elif hasattr(cover, "cover"):
        sets = cover.cover.node_sets()
    else:
        sets = list(cover)
    return [frozenset(s) for s in sets]


def _validated_sets(cover, node_count: int, name: str) -> list[frozenset]:
    sets = _as_node_sets(cover)
    if not sets:
        raise ValueError(f"{name} has no communities")
    for s in sets:
        if not s:
            raise ValueError(f"{name} contains an empty community")
        for v in s:
            if not 0 <= v < node_count:
                raise ValueError(
                    f"{name} mentions node {v}, outside the universe of "
                    f"{node_count} nodes")
    return sets


def _entropy_bits(counts, n: int):
    """Elementwise h(c/n) = -(c/n)*log2(c/n) with h(0) = 0."""
    p = np.asarray(counts, dtype=np.float64) / n
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = -p[mask] * np.log2(p[mask])
    return out


def _overlap_counts(xs, ys, length_y):
    """Integer |X_k intersect Y_l| matrix, built via per-node membership."""
    member_of_y: dict[int, list[int]] = {}
    for l, s in enumerate(ys):
        for v in s:
            member_of_y.setdefault(v, []).append(l)
    overlap = np.zeros((len(xs), length_y), dtype=np.int64)
    for k, s in enumerate(xs):
        row = overlap[k]
        for v in s:
            for l in member_of_y.get(v, ()):
                row[l] += 1
    return overlap


def _normalized_terms(cond, qualified, marginal):
    """Per-row min of qualified conditional entropies, normalized into [0, 1].

    Rows with no qualified partner stay at 1; rows whose indicator has zero
    entropy contribute 0 once any partner qualifies.
    """
    masked = np.where(qualified, cond, np.inf)
    best = masked.min(axis=1)
    matched = np.isfinite(best)
    terms = np.ones(cond.shape[0])
    positive = matched & (marginal > 0)
    terms[positive] = np.clip(best[positive] / marginal[positive], 0.0, 1.0)
    terms[matched & (marginal <= 0)] = 0.0
    return terms


def overlapping_nmi(cover_x, cover_y, node_count: int) -> float:
    """NMI between two possibly-overlapping covers of the same universe."""
    if node_count < 1:
        raise ValueError(f"node_count must be >= 1, got {node_count!r}")
    xs = _validated_sets(cover_x, node_count, "cover_x")
    ys = _validated_sets(cover_y, node_count, "cover_y")
    n = node_count

    size_x = np.array([len(s) for s in xs], dtype=np.int64)
    size_y = np.array([len(s) for s in ys], dtype=np.int64)
    both = _overlap_counts(xs, ys, len(ys))
    only_x = size_x[:, None] - both
    only_y = size_y[None, :] - both
    neither = n - size_x[:, None] - size_y[None, :] + both

    h11 = _entropy_bits(both, n)
    h10 = _entropy_bits(only_x, n)
    h01 = _entropy_bits(only_y, n)
    h00 = _entropy_bits(neither, n)
    hx = _entropy_bits(size_x, n) + _entropy_bits(n - size_x, n)
    hy = _entropy_bits(size_y, n) + _entropy_bits(n - size_y, n)

    qualified = (h11 + h00) >= (h01 + h10)
    joint = h11 + h10 + h01 + h00
    cond_x_given_y = joint - hy[None, :]
    cond_y_given_x = joint - hx[:, None]

    terms_x = _normalized_terms(cond_x_given_y, qualified, hx)
    terms_y = _normalized_terms(cond_y_given_x.T, qualified.T, hy)
    # fsum keeps the means independent of community order.
    mean_x = math.fsum(terms_x) / len(terms_x)
    mean_y = math.fsum(terms_y) / len(terms_y)
    value = 1.0 - (mean_x + mean_y) / 2.0
    return min(1.0, max(0.0, value))


def _universe_size(results, node_count: int | None) -> int:
    if node_count is not None:
        if node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {node_count!r}")
        return node_count
    for result in results:
        cover = getattr(result, "cover", None)
        unassigned = getattr(result, "unassigned_nodes", None)
        if cover is not None and unassigned is not None:
            return len(cover.node_union()) + unassigned
    raise ValueError(
        "node_count is required when results carry no per-scale covers")


def windowed_nmi(results, p: int, node_count: int | None = None,
                 direction: str = "forward") -> list:
    """Per-scale mean NMI against the next (or previous) p-1 covers.

    The default forward window makes the value at scale s describe how far
    the cover persists into coarser scales; direction="backward" compares
    against finer predecessors instead.  Entries with no neighbor on the
    chosen side are None.
    """
    if p < 2:
        raise ValueError(f"window must span at least 2 scales, got p={p!r}")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, "
                         f"got {direction!r}")
    results = list(results)
    n = _universe_size(results, node_count)
    sets = [_validated_sets(r, n, f"results[{i}]")
            for i, r in enumerate(results)]
    series: list = []
    for s in range(len(sets)):
        if direction == "forward":
            neighbors = range(s + 1, min(s + p, len(sets)))
        else:
            neighbors = range(max(s - p + 1, 0), s)
        values = [overlapping_nmi(sets[s], sets[j], n) for j in neighbors]
        series.append(math.fsum(values) / len(values) if values else None)
    return series


def reference_nmi(results, reference_cover,
                  node_count: int | None = None) -> list[float]:
    """Per-scale NMI of each result cover against one reference cover."""
    results = list(results)
    n = _universe_size(results, node_count)
    reference = _validated_sets(reference_cover, n, "reference_cover")
    return [overlapping_nmi(_validated_sets(r, n, f"results[{i}]"),
                            reference, n)
            for i, r in enumerate(results)]


@dataclass
class NmiReport:
    """Per-scale NMI series: two stability windows plus named references."""

    nmi_w3: list
    nmi_w5: list
    references: dict[str, list]

    def column_names(self) -> list[str]:
        return ["nmi_w3", "nmi_w5"] + [f"nmi_ref_{name}"
                                       for name in self.references]


def build_nmi_report(results, references: dict | None = None,
                     node_count: int | None = None) -> NmiReport:
    """Windowed series at p=3 and p=5 plus one series per reference cover."""
    refs = {name: reference_nmi(results, cover, node_count)
            for name, cover in (references or {}).items()}
    return NmiReport(nmi_w3=windowed_nmi(results, 3, node_count),
                     nmi_w5=windowed_nmi(results, 5, node_count),
                     references=refs)


def nmi_csv_columns(report: NmiReport) -> tuple[list[str], list[list[str]]]:
    """Header names and per-scale cell strings; None becomes an empty cell."""

    def fmt(value) -> str:
        return "" if value is None else repr(float(value))

    names = report.column_names()
    series = [report.nmi_w3, report.nmi_w5] + list(report.references.values())
    lengths = {len(s) for s in series}
    if len(lengths) > 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    rows = [[fmt(s[i]) for s in series] for i in range(lengths.pop())]
    return names, rows
