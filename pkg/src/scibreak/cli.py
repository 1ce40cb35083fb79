"""Command-line interface for the breakthrough analytics pipeline.

Subcommands mirror the pipeline stages so each can be run standalone on the
artifacts of the previous one; ``run`` executes everything from a config
file.  See the README for the config schema and output layout.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis as stats
from .clustering import (
    cluster_mean_trajectory,
    default_sigma,
    distance_matrix,
    leiden_clusters,
    similarity_matrix,
    trajectories_from_series,
)
from .complexity import binarize, genepy_scores, rca
from .config import ConfigError, PipelineConfig, with_overrides
from .corpus import CitationCorpus, FieldMap, ingest_files
from .impact import BreakthroughClass, cd_all, nbnc_all
from .panel import (
    country_subfield_counts,
    decade_windows,
    scaled_counts,
    select_breakthroughs,
    subfield_series,
)
from .pipeline import (
    SeriesResult,
    StageError,
    read_breakthrough_tables,
    read_metrics_dir,
    read_panel,
    read_series_table,
    run_pipeline,
    write_breakthrough_tables,
    write_cluster_outputs,
    write_metrics_tables,
    write_panel,
    write_rank_outputs,
    write_series_table,
)


def _add_ingest(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("ingest", help="parse JSON-lines works into a snapshot")
    p.add_argument("--input", required=True, nargs="+", help="JSONL file(s), .gz ok")
    p.add_argument("--snapshot", required=True, help="output snapshot path")
    p.add_argument("--report", help="optional ingest report JSON path")
    p.add_argument("--year-min", type=int, default=1900)
    p.add_argument("--year-max", type=int, default=2023)
    p.add_argument("--map-id", default="id")
    p.add_argument("--map-year", default="publication_year")
    p.add_argument("--map-references", default="referenced_works")
    p.add_argument("--map-subfield", default="primary_topic.subfield.id")
    p.add_argument("--map-countries", default="authorships.countries")


def _cmd_ingest(args: argparse.Namespace) -> int:
    schema = FieldMap(
        work_id=args.map_id,
        pub_year=args.map_year,
        references=args.map_references,
        subfield=args.map_subfield,
        countries=args.map_countries,
    )
    corpus, report = ingest_files(
        args.input, schema, year_min=args.year_min, year_max=args.year_max
    )
    corpus.save_snapshot(args.snapshot)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    print(
        f"ingested {report.works_ingested}/{report.records_seen} records "
        f"({corpus.n_edges} edges) -> {args.snapshot}"
    )
    return 0


def _add_metrics(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("metrics", help="compute NBNC and CD per work")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--start", type=int, required=True, help="first pub year scored")
    p.add_argument("--end", type=int, required=True, help="last pub year scored")
    p.add_argument(
        "--cocited-semantics", choices=("multiset", "set"), default="multiset"
    )
    p.add_argument(
        "--gamma-convention",
        choices=("own_age", "focal_calendar"),
        default="own_age",
    )


def _cmd_metrics(args: argparse.Namespace) -> int:
    corpus = CitationCorpus.load_snapshot(args.snapshot)
    scores = nbnc_all(
        corpus,
        args.horizon,
        (args.start, args.end),
        cocited_semantics=args.cocited_semantics,
        gamma_convention=args.gamma_convention,
    )
    cds = cd_all(corpus, args.horizon, (args.start, args.end))
    written = write_metrics_tables(Path(args.out_dir), corpus, scores, cds)
    print(f"wrote {len(written)} yearly metric tables under {args.out_dir}")
    return 0


def _add_select(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("select", help="pick top-fraction breakthroughs per year")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--metrics-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--top-fraction", type=float, default=0.05)


def _cmd_select(args: argparse.Namespace) -> int:
    corpus = CitationCorpus.load_snapshot(args.snapshot)
    scores, cds = read_metrics_dir(Path(args.metrics_dir))
    records = select_breakthroughs(corpus, scores, cds, args.top_fraction)
    write_breakthrough_tables(Path(args.out_dir), records)
    print(f"selected {len(records)} breakthroughs -> {args.out_dir}")
    return 0


def _add_panel(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("panel", help="build subfield series and country panels")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--breakthroughs-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--end", type=int, required=True)
    p.add_argument("--window-width", type=int, default=10)
    p.add_argument(
        "--allowlist", help="comma-separated subfield ids admitted to panels"
    )


def _cmd_panel(args: argparse.Namespace) -> int:
    corpus = CitationCorpus.load_snapshot(args.snapshot)
    records = read_breakthrough_tables(Path(args.breakthroughs_dir))
    out_dir = Path(args.out_dir)
    years = range(args.start, args.end + 1)
    series = subfield_series(records, corpus, years)
    series = SeriesResult(
        by_subfield={s: scaled_counts(v) for s, v in series.by_subfield.items()},
        unlabeled=series.unlabeled,
    )
    write_series_table(out_dir, series)
    if args.allowlist:
        allow = {int(s) for s in args.allowlist.split(",") if s.strip()}
        records = [r for r in records if r.subfield_id in allow]
    count = 0
    for window in decade_windows(args.start, args.end, args.window_width):
        for kind in (BreakthroughClass.CONSOLIDATING, BreakthroughClass.DISRUPTIVE):
            write_panel(out_dir, country_subfield_counts(records, window, kind))
            count += 1
    print(f"wrote series and {count} panels under {args.out_dir}")
    return 0


def _add_cluster(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("cluster", help="cluster subfield growth trajectories")
    p.add_argument("--series", required=True, help="subfield_series.tsv path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--sigma", type=float, help="kernel width (default: auto)")
    p.add_argument("--per-component", action="store_true")


def _cmd_cluster(args: argparse.Namespace) -> int:
    series = read_series_table(Path(args.series))
    if not series.by_subfield:
        print("no subfields in series file", file=sys.stderr)
        return 1
    grids = {s.years for s in series.by_subfield.values()}
    years = sorted(set().union(*grids))
    trajectories = trajectories_from_series(series.by_subfield, years)
    distances = distance_matrix(trajectories, per_component=args.per_component)
    sigma = args.sigma if args.sigma is not None else default_sigma(distances)
    similarity = similarity_matrix(distances, sigma)
    result = leiden_clusters(similarity, resolution=args.resolution, seed=args.seed)
    means = cluster_mean_trajectory(result, trajectories)
    write_cluster_outputs(Path(args.out_dir), distances, similarity, result, means)
    print(
        f"{len(result.cluster_members)} clusters, "
        f"{len(result.singletons)} singletons -> {args.out_dir}"
    )
    return 0


def _add_rank(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("rank", help="RCA-filter panels and rank via GENEPY")
    p.add_argument(
        "--panel", required=True, nargs="+", help="panel matrix .tsv path(s)"
    )
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rca-threshold", type=float, default=1.0)
    p.add_argument("--eigen-count", type=int, default=2)


def _cmd_rank(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    done = 0
    for path in args.panel:
        panel = read_panel(Path(path))
        if panel.counts.size == 0 or not (panel.counts > 0).any():
            print(f"skipping empty panel {path}", file=sys.stderr)
            continue
        rca_matrix = rca(panel)
        adjacency = binarize(rca_matrix, args.rca_threshold)
        countries_result, subfields_result = genepy_scores(
            adjacency, args.eigen_count
        )
        write_rank_outputs(
            out_dir,
            adjacency,
            rca_matrix.values,
            rca_matrix.countries,
            rca_matrix.subfields,
            countries_result,
            subfields_result,
        )
        done += 1
    print(f"ranked {done} panels -> {args.out_dir}")
    return 0


def _read_columns(path: str, label_col: str, value_col: str) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        sample = fh.readline()
        delimiter = "\t" if "\t" in sample else ","
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter)
        out = {}
        for row in reader:
            try:
                out[row[label_col]] = float(row[value_col])
            except (KeyError, TypeError, ValueError):
                continue
        return out


def _add_correlate(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("correlate", help="Spearman correlation of two rankings")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--a-cols", default="label,rank", help="label,value columns of A")
    p.add_argument("--b-cols", default="label,rank", help="label,value columns of B")


def _cmd_correlate(args: argparse.Namespace) -> int:
    a_label, a_value = (c.strip() for c in args.a_cols.split(","))
    b_label, b_value = (c.strip() for c in args.b_cols.split(","))
    rank_a = _read_columns(args.file_a, a_label, a_value)
    rank_b = _read_columns(args.file_b, b_label, b_value)
    rho = stats.spearman(rank_a, rank_b)
    common = len(set(rank_a) & set(rank_b))
    print(f"spearman={rho!r} n_common={common}")
    return 0


def _add_fit(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("fit", help="power-law fit of two positive columns")
    p.add_argument("data", help="delimited file with a header row")
    p.add_argument("--x-col", required=True)
    p.add_argument("--y-col", required=True)


def _cmd_fit(args: argparse.Namespace) -> int:
    with open(args.data, newline="", encoding="utf-8") as fh:
        sample = fh.readline()
        delimiter = "\t" if "\t" in sample else ","
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter)
        xs = []
        ys = []
        for row in reader:
            try:
                xs.append(float(row[args.x_col]))
                ys.append(float(row[args.y_col]))
            except (KeyError, TypeError, ValueError):
                continue
    fit = stats.loglog_fit(xs, ys)
    print(
        f"exponent={fit.exponent!r} prefactor={fit.prefactor!r} "
        f"residual={fit.residual!r} n={len(xs)}"
    )
    return 0


def _add_run(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-root", help="override the config's output root")


def _cmd_run(args: argparse.Namespace) -> int:
    config = PipelineConfig.from_file(args.config)
    if args.out_root:
        config = with_overrides(config, out_root=args.out_root)
    manifest = run_pipeline(config)
    run_dir = Path(config.out_root) / manifest["config_hash"]
    for stage in manifest["stages"]:
        print(f"{stage['name']:<10} {stage['status']:<8} {stage['detail']}")
    print(f"run directory: {run_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="scibreak",
        description=(
            "Breakthrough analytics over citation graphs: normalized citation "
            "scores, disruption indices, growth clustering, complexity ranks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_ingest(sub)
    _add_metrics(sub)
    _add_select(sub)
    _add_panel(sub)
    _add_cluster(sub)
    _add_rank(sub)
    _add_correlate(sub)
    _add_fit(sub)
    _add_run(sub)
    args = parser.parse_args(argv)
    handlers = {
        "ingest": _cmd_ingest,
        "metrics": _cmd_metrics,
        "select": _cmd_select,
        "panel": _cmd_panel,
        "cluster": _cmd_cluster,
        "rank": _cmd_rank,
        "correlate": _cmd_correlate,
        "fit": _cmd_fit,
        "run": _cmd_run,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, StageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
