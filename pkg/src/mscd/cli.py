"""Command-line front end: detect, generate, and evaluate subcommands.

Each run writes its outputs plus a manifest into a target directory.  Exit
codes: 0 on success, 2 for usage or validation problems (including unreadable
inputs), 3 for failures inside an otherwise valid run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import sys
import time

from . import __version__
from .benchmark import (
    BenchmarkConfig,
    generate_hierarchical,
    measure_mixing,
    write_benchmark_manifest,
)
from .communities import read_cover, write_cover
from .driver import (
    CSV_COLUMNS,
    DriverConfig,
    detect_multiscale,
    resolve_thread_count,
    sample_scales,
    write_node_list,
    write_scale_csv,
)
from .graph import EdgeListParseError, load_edge_list, write_edge_list
from .metrics import build_nmi_report, nmi_csv_columns
from .seeding import SeedConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

CSV_NAME = "scales.csv"
NODES_NAME = "nodes.txt"
MANIFEST_NAME = "manifest.txt"
RANGES_NAME = "detection_ranges.txt"


class CliError(Exception):
    """Validation problem surfaced to the user with exit code 2."""


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path: str, rows) -> None:
    """Write (key, value) pairs as the same key-value text the generator uses."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in rows:
            fh.write(f"{key} = {value}\n")


def cover_file_name(index: int) -> str:
    return f"cover_{index:03d}.txt"


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise CliError(f"{what} not found: {path}")


def _read_cover_as_id_sets(path: str, label_ids) -> list[frozenset[int]]:
    """Load a cover file of node labels and map it onto internal node ids."""
    sets = []
    for row in read_cover(path):
        ids = []
        for label in row:
            node = label_ids.get(label)
            if node is None:
                raise CliError(f"{path}: node label {label} is not in the graph")
            ids.append(node)
        sets.append(frozenset(ids))
    return sets


def cmd_detect(args) -> int:
    _require_file(args.input, "input edge list")
    if args.initial_cover is not None:
        _require_file(args.initial_cover, "initial cover")

    t_start = time.perf_counter()
    try:
        graph = load_edge_list(args.input)
    except EdgeListParseError as exc:
        raise CliError(f"{args.input}: {exc}") from exc
    t_parsed = time.perf_counter()

    initial_cover = None
    if args.initial_cover is not None:
        initial_cover = _read_cover_as_id_sets(args.initial_cover, graph.label_ids)
        if not initial_cover:
            raise CliError(f"{args.initial_cover}: cover file has no communities")

    scales = sample_scales(args.scales_min, args.scales_max, args.scales_count)
    config = DriverConfig(
        scales=scales,
        eta=args.eta,
        removal_cap=args.k,
        threads=args.threads,
        seed_config=SeedConfig(rule=args.seed_rule, rng_seed=args.rng_seed),
        initial_cover=initial_cover,
        keep_larger_on_merge=not args.strict_paper_merge,
    )

    os.makedirs(args.out, exist_ok=True)
    try:
        results = detect_multiscale(graph, config)
    except Exception as exc:
        print(f"mscd detect: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    t_done = time.perf_counter()

    write_scale_csv(os.path.join(args.out, CSV_NAME), results,
                    zero_timings=args.zero_timings)
    all_nodes = set(range(graph.node_count))
    for i, result in enumerate(results):
        node_sets = result.cover.node_sets()
        if args.emit_singletons:
            covered = set().union(*node_sets) if node_sets else set()
            node_sets.extend({u} for u in sorted(all_nodes - covered))
        write_cover(os.path.join(args.out, cover_file_name(i)), node_sets,
                    labels=graph.labels)
    write_node_list(os.path.join(args.out, NODES_NAME), graph)

    rows = [
        ("tool", "mscd"),
        ("tool_version", __version__),
        ("command", "detect"),
        ("input", args.input),
        ("input_sha256", sha256_file(args.input)),
        ("node_count", graph.node_count),
        ("edge_count", graph.edge_count),
        ("scales_min", repr(args.scales_min)),
        ("scales_max", repr(args.scales_max)),
        ("scales_count", args.scales_count),
        ("eta", repr(args.eta)),
        ("k", args.k),
        ("threads_requested", args.threads),
        ("threads_resolved", resolve_thread_count(args.threads)),
        ("seed_rule", args.seed_rule),
        ("rng_seed", args.rng_seed),
        ("initial_cover", args.initial_cover or ""),
        ("emit_singletons", args.emit_singletons),
        ("strict_paper_merge", args.strict_paper_merge),
        ("zero_timings", args.zero_timings),
        ("wall_parse_s", f"{t_parsed - t_start:.3f}"),
        ("wall_detect_s", f"{t_done - t_parsed:.3f}"),
        ("wall_total_s", f"{time.perf_counter() - t_start:.3f}"),
    ]
    write_manifest(os.path.join(args.out, MANIFEST_NAME), rows)
    return EXIT_OK


def cmd_generate(args) -> int:
    config = BenchmarkConfig(
        n=args.n,
        micro_size=args.micro_size,
        micros_per_macro=args.micros_per_macro,
        avg_degree=args.avg_degree,
        mu1=args.mu1,
        mu2=args.mu2,
        rng_seed=args.rng_seed,
    )
    os.makedirs(args.out, exist_ok=True)
    try:
        graph, micro_cover, macro_cover = generate_hierarchical(config)
        realized_mu1 = measure_mixing(graph, macro_cover)
        realized_mu2 = measure_mixing(graph, micro_cover)
    except Exception as exc:
        print(f"mscd generate: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    write_edge_list(graph, os.path.join(args.out, "edges.txt"))
    write_cover(os.path.join(args.out, "micro_cover.txt"),
                micro_cover, labels=graph.labels)
    write_cover(os.path.join(args.out, "macro_cover.txt"),
                macro_cover, labels=graph.labels)
    write_benchmark_manifest(os.path.join(args.out, MANIFEST_NAME), config,
                             realized_mu1, realized_mu2, graph.edge_count)
    return EXIT_OK


def _load_run(run_dir: str):
    """Read nodes.txt, scales.csv, and the per-scale cover files of a run."""
    csv_path = os.path.join(run_dir, CSV_NAME)
    nodes_path = os.path.join(run_dir, NODES_NAME)
    _require_file(csv_path, "per-scale CSV")
    _require_file(nodes_path, "node list")

    with open(nodes_path, "r", encoding="utf-8") as fh:
        labels = [int(line.strip()) for line in fh if line.strip()]
    label_ids = {label: i for i, label in enumerate(labels)}

    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [row for row in reader if row]
    base = list(CSV_COLUMNS)
    if header is None or header[:len(base)] != base:
        raise CliError(f"{csv_path}: unexpected CSV header {header!r}")
    rows = [row[:len(base)] for row in rows]

    covers = []
    for i in range(len(rows)):
        path = os.path.join(run_dir, cover_file_name(i))
        _require_file(path, f"cover file for scale row {i}")
        covers.append(_read_cover_as_id_sets(path, label_ids))
    return labels, label_ids, base, rows, covers


def _constant_count_runs(counts: list[int]):
    """Maximal [start, end] index runs of equal community_count, length >= 2."""
    runs = []
    start = 0
    for i in range(1, len(counts) + 1):
        if i == len(counts) or counts[i] != counts[start]:
            if i - start >= 2:
                runs.append((start, i - 1))
            start = i
    return runs


def write_detection_ranges(path: str, alphas, counts, report, threshold) -> None:
    """Summarize constant-count scale runs and which references they match.

    One line per run: the alpha interval (high to low), the run length, the
    stable community count, each reference's NMI peak inside the run, and the
    names of references whose peak reaches the threshold.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# alpha_high alpha_low scales community_count"
                 " [ref=peak ...] detected=names\n")
        for start, end in _constant_count_runs(counts):
            parts = [repr(alphas[start]), repr(alphas[end]),
                     str(end - start + 1), str(counts[start])]
            detected = []
            for name, series in report.references.items():
                peak = max(series[start:end + 1])
                parts.append(f"{name}={peak:.4f}")
                if peak >= threshold:
                    detected.append(name)
            parts.append("detected=" + (",".join(detected) if detected else "-"))
            fh.write(" ".join(parts) + "\n")


def cmd_evaluate(args) -> int:
    labels, label_ids, base, rows, covers = _load_run(args.run_dir)

    references = {}
    for spec_arg in args.reference:
        name, sep, path = spec_arg.partition("=")
        if not sep or not name or not path:
            raise CliError(
                f"--reference expects NAME=PATH, got {spec_arg!r}")
        if name in references:
            raise CliError(f"duplicate reference name {name!r}")
        _require_file(path, f"reference cover {name!r}")
        references[name] = _read_cover_as_id_sets(path, label_ids)

    try:
        report = build_nmi_report(covers, references=references,
                                  node_count=len(labels))
    except Exception as exc:
        print(f"mscd evaluate: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    names, cells = nmi_csv_columns(report)

    csv_path = os.path.join(args.run_dir, CSV_NAME)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(base + names)
        for row, extra in zip(rows, cells):
            writer.writerow(row + extra)

    alphas = [float(row[0]) for row in rows]
    counts = [int(row[1]) for row in rows]
    write_detection_ranges(os.path.join(args.run_dir, RANGES_NAME),
                           alphas, counts, report, args.threshold)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mscd",
        description="Multi-scale overlapping community detection toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"mscd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run the multi-scale detection sweep")
    p.add_argument("input", help="edge-list file (u v [weight] per line)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scales-min", type=float, default=0.5)
    p.add_argument("--scales-max", type=float, default=1.0)
    p.add_argument("--scales-count", type=int, default=100)
    p.add_argument("--eta", type=float, default=0.5,
                   help="overlap ratio that triggers a merge")
    p.add_argument("--k", type=int, default=5,
                   help="removal passes after each growth")
    p.add_argument("--threads", type=int, default=0,
                   help="worker count; 0 resolves env override then cores")
    p.add_argument("--seed-rule", type=int, choices=(1, 2), default=1)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--initial-cover", default=None,
                   help="cover file used instead of seed selection")
    p.add_argument("--emit-singletons", action="store_true",
                   help="also write unassigned nodes as singleton communities")
    p.add_argument("--strict-paper-merge", action="store_true",
                   help="merge keeps the checked community instead of the larger one")
    p.add_argument("--zero-timings", action="store_true",
                   help="write 0 in the wall_time_ms column (reproducible bytes)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("generate", help="generate a two-level benchmark network")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--micro-size", type=int, default=25)
    p.add_argument("--micros-per-macro", type=int, default=4)
    p.add_argument("--avg-degree", type=float, default=20.0)
    p.add_argument("--mu1", type=float, default=0.05)
    p.add_argument("--mu2", type=float, default=0.2)
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="append NMI columns to a detect run")
    p.add_argument("run_dir", help="directory written by mscd detect")
    p.add_argument("--reference", action="append", default=[],
                   metavar="NAME=PATH",
                   help="ground-truth cover; adds an nmi_ref_NAME column"
                        " (repeatable)")
    p.add_argument("--threshold", type=float, default=0.9,
                   help="NMI peak needed to mark a range as detected")
    p.set_defaults(func=cmd_evaluate)
    return parser


def entrypoint(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mscd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"mscd {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(entrypoint())
