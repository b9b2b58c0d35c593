"""Command-line surface: conversion, analyses, figures, reproducible runs.

Every subcommand writes its outputs under ``--out`` (default ``out/``) in a
``<subcommand>/`` directory together with a ``run.json`` manifest recording
the resolved parameters, the seed, and SHA-256 hashes of every corpus input
file, so a run can be reproduced exactly.  The output directory itself is not
part of the manifest: trees produced by identical runs into different
directories are byte-identical.

Exit codes: 0 success, 1 analysis/corpus error (message on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import (
    Corpus,
    CorpusError,
    Poem,
    filtered_line_numbers,
    parse_corpus,
    rolling_windows,
)
from .errors import AnalysisError, VersemetryError
from .figures import FigureKind, FigureSpec, render_figure
from .lexicon import (
    SegmentMode,
    build_compound_index,
    hapax_cumulative_fit,
    segment_fits,
    shared_compound_scores,
    type_token_ratio,
)
from .metre import (
    DEFAULT_SPLIT_LINE,
    FULL_LABELS,
    Granularity,
    HALF_LABELS,
    cumulative_incidence_r,
    halves_independence_test,
    incidence_points,
    pattern_counts,
    rolling_pattern_proportions,
    split_distribution_tests,
)
from .ngramcluster import (
    agglomerative_complete,
    build_profiles,
    clustering_quality,
    cosine_distance_matrix,
    majority_part,
    robustness_sweep,
    top_two_assignment,
    window_id,
)
from .sensepause import mean_syllables_per_line, sample_ratio_comparison
from .stats import RngStream, TestResult

__all__ = ["dispatch", "main"]

TEST_COLUMNS = ("test", "method", "statistic", "df", "p_value", "n_obs",
                "min_expected", "dropped_categories", "merged_categories")
FIT_COLUMNS = ("unit", "first_line", "last_line", "slope_per100", "intercept",
               "r", "n_hapax")
PAIR_COLUMNS = ("poem_a", "poem_b", "observed", "null_mean", "null_sd", "z",
                "tail")


# ---------------------------------------------------------------- output ----

def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")


def write_table(directory: Path, name: str, columns: Sequence[str],
                rows: Iterable[Mapping[str, object]], fmt: str) -> None:
    rows = list(rows)
    if fmt == "json":
        payload = [{c: row.get(c) for c in columns} for row in rows]
        _write_text(directory / f"{name}.json",
                    json.dumps(payload, indent=2, sort_keys=True,
                               ensure_ascii=False) + "\n")
        return
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"{name}.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def test_result_row(label: str, result: TestResult) -> dict:
    return {
        "test": label,
        "method": result.method.value,
        "statistic": result.statistic,
        "df": result.df,
        "p_value": result.p_value,
        "n_obs": result.n_obs,
        "min_expected": result.min_expected,
        "dropped_categories": result.dropped_categories,
        "merged_categories": result.merged_categories,
    }


def _hash_file(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def write_run_manifest(directory: Path, command: str, corpus_root: Path | None,
                       parameters: Mapping[str, object], seed: int) -> None:
    inputs: dict[str, str] = {}
    if corpus_root is not None:
        manifest_path = corpus_root / "corpus.json"
        inputs["corpus.json"] = _hash_file(manifest_path)
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        for entry in manifest.get("poems", []):
            for key in ("text", "scansion", "compounds"):
                name = entry.get(key)
                if name:
                    inputs[name] = _hash_file(corpus_root / name)
    payload = {
        "command": command,
        "parameters": dict(sorted(parameters.items())),
        "seed": seed,
        "inputs": dict(sorted(inputs.items())),
    }
    _write_text(directory / "run.json",
                json.dumps(payload, indent=2, sort_keys=True,
                           ensure_ascii=False) + "\n")


def _write_svg(directory: Path, name: str, spec: FigureSpec) -> None:
    _write_text(directory / f"{name}.svg", render_figure(spec))


# ------------------------------------------------------------ converters ----

def _convert_text_lines(raw: str) -> list[str]:
    lines = []
    for line in raw.splitlines():
        if "\t" in line:
            lines.append(line)
        elif " / " in line:
            a, _, b = line.partition(" / ")
            lines.append(f"{a}\t{b}")
        else:
            lines.append(f"{line}\t")
    return lines


def _strip_header(rows: list[str], first_field: str) -> list[str]:
    if rows and rows[0].split("\t")[:1] == [first_field]:
        return rows[1:]
    return rows


def _compound_rows(rows: list[str]) -> list[str]:
    """Normalize compound rows to one lemma per row.

    Source rows may carry several lemmas after the line number; the canonical
    shape repeats the line number instead.  Rows without a recognizable lemma
    pass through unchanged so the validation parse rejects them with a
    precise message.
    """
    out = []
    for raw in rows:
        if not raw.strip():
            continue
        fields = raw.split("\t")
        lemmas = [f for f in fields[1:] if f]
        if not lemmas:
            out.append(raw)
            continue
        out.extend(f"{fields[0]}\t{lemma}" for lemma in lemmas)
    return out


def cmd_convert(args: argparse.Namespace) -> int:
    """Convert an external dataset directory into the canonical format.

    Assumed source layout: one ``<poem>.txt`` per poem (half-lines separated
    by a TAB or by " / "), optional ``<poem>.scansion.tsv`` (line, a, b;
    header row optional), optional ``<poem>.compounds.tsv`` (line followed by
    one or more lemmas; normalized to one lemma per row), and an optional
    ``parts.json`` mapping poem id to part ranges.  Everything else about the
    source tree is ignored.
    """
    source = Path(args.dataset)
    if not source.is_dir():
        raise CorpusError(f"missing file: {source}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    parts_path = source / "parts.json"
    parts_map = {}
    if parts_path.is_file():
        parts_map = json.loads(parts_path.read_text(encoding="utf-8"))

    manifest: dict = {"poems": []}
    text_files = sorted(source.glob("*.txt"))
    if not text_files:
        raise CorpusError(f"no poem text files found under {source}")
    for text_path in text_files:
        poem_id = text_path.stem
        lines = _convert_text_lines(text_path.read_text(encoding="utf-8"))
        _write_text(out / f"{poem_id}.txt", "\n".join(lines) + "\n")
        entry = {"id": poem_id, "text": f"{poem_id}.txt", "scansion": None,
                 "compounds": None, "parts": None}
        scansion_src = source / f"{poem_id}.scansion.tsv"
        if scansion_src.is_file():
            rows = _strip_header(
                scansion_src.read_text(encoding="utf-8").splitlines(), "line")
            _write_text(out / f"{poem_id}.scansion.tsv",
                        "line\ta\tb\n" + "\n".join(rows) + "\n")
            entry["scansion"] = f"{poem_id}.scansion.tsv"
        compounds_src = source / f"{poem_id}.compounds.tsv"
        if compounds_src.is_file():
            rows = _strip_header(
                compounds_src.read_text(encoding="utf-8").splitlines(), "line")
            _write_text(out / f"{poem_id}.compounds.tsv",
                        "line\tlemma\n" + "\n".join(_compound_rows(rows)) + "\n")
            entry["compounds"] = f"{poem_id}.compounds.tsv"
        if poem_id in parts_map:
            entry["parts"] = parts_map[poem_id]
        manifest["poems"].append(entry)
    _write_text(out / "corpus.json", json.dumps(manifest, indent=2,
                                                ensure_ascii=False) + "\n")
    # validation pass: any structural problem fails the conversion
    parse_corpus(out)
    print(f"converted {len(manifest['poems'])} poems into {out}")
    return 0


# -------------------------------------------------------------- analyses ----

def _load_corpus(args: argparse.Namespace) -> tuple[Corpus, Path]:
    root = Path(args.corpus)
    return parse_corpus(root), root


def _ratio_rows(reports) -> list[dict]:
    return [
        {"unit": r.unit_id, "intraline": r.intraline_count,
         "final": r.final_count, "ratio": r.ratio}
        for r in reports
    ]


def _poem_lines(poem: Poem, part: str | None):
    if part is None:
        return list(poem.lines)
    return [poem.line(i) for i in filtered_line_numbers(poem, part)]


def cmd_sensepause(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "sensepause"
    poem_a, poem_b = corpus.poem(args.poem_a), corpus.poem(args.poem_b)
    toggles = {"strict_compat": args.strict_compat,
               "ascii_quotes": args.ascii_quotes,
               "count_hyphen": not args.no_count_hyphen}
    reports_a, reports_b, result = sample_ratio_comparison(
        poem_a, poem_b, args.sample_len,
        part_a=args.part_a, part_b=args.part_b, **toggles)
    write_table(out, "ratios", ("unit", "intraline", "final", "ratio"),
                _ratio_rows(reports_a) + _ratio_rows(reports_b), args.format)
    write_table(out, "ttest", TEST_COLUMNS,
                [test_result_row("intraline_ratio_t", result)], args.format)
    syllable_rows = [
        {"poem": poem.id, "part": part or "",
         "mean_syllables": mean_syllables_per_line(_poem_lines(poem, part))}
        for poem, part in ((poem_a, args.part_a), (poem_b, args.part_b))
    ]
    write_table(out, "syllables", ("poem", "part", "mean_syllables"),
                syllable_rows, args.format)
    write_run_manifest(out, "sensepause", root, {
        "poem_a": args.poem_a, "poem_b": args.poem_b,
        "part_a": args.part_a, "part_b": args.part_b,
        "sample_len": args.sample_len, "format": args.format, **toggles,
    }, args.seed)
    return 0


def _granularity(name: str) -> Granularity:
    return Granularity.HALF_LINE if name == "half" else Granularity.FULL_LINE


def _proportions_rows(rolling) -> tuple[tuple[str, ...], list[dict]]:
    labels = tuple(rolling.series)
    rows = []
    for i, start in enumerate(rolling.starts):
        row: dict[str, object] = {"start": start}
        for label in labels:
            row[label] = rolling.series[label][i]
        rows.append(row)
    return ("start",) + labels, rows


def _stacked_spec(rolling, title: str, split_line: int | None) -> FigureSpec:
    series = tuple(
        (label, tuple(zip(rolling.starts, values)))
        for label, values in rolling.series.items()
    )
    annotations = ()
    if split_line is not None:
        annotations = ((float(split_line), f"line {split_line}"),)
    return FigureSpec(kind=FigureKind.STACKED_AREA, series=series, title=title,
                      x_label="window start line", y_label="proportion",
                      annotations=annotations)


def cmd_metre_rolling(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "metre"
    poem = corpus.poem(args.poem)
    rolling = rolling_pattern_proportions(
        poem, _granularity(args.granularity), args.width, args.step)
    columns, rows = _proportions_rows(rolling)
    write_table(out, f"proportions-{poem.id}", columns, rows, args.format)
    _write_svg(out, f"rolling-{poem.id}", _stacked_spec(
        rolling, f"{poem.id}: rolling {args.granularity}-line proportions",
        args.split_line))
    write_run_manifest(out, "metre rolling", root, {
        "poem": args.poem, "granularity": args.granularity,
        "width": args.width, "step": args.step,
        "split_line": args.split_line, "format": args.format,
    }, args.seed)
    return 0


def _split_rows(table, poem_id: str) -> list[dict]:
    rows = []
    for label, result in (
            ("half_homogeneity", table.half_homogeneity),
            ("half_gof", table.half_gof),
            ("full_homogeneity", table.full_homogeneity),
            ("full_gof", table.full_gof),
            ("full_homogeneity_bootstrap", table.full_homogeneity_boot),
            ("full_gof_bootstrap", table.full_gof_boot)):
        row = test_result_row(label, result)
        row["poem"] = poem_id
        row["split_line"] = table.split_line
        rows.append(row)
    return rows


def _pairing_rows(table, poem_id: str) -> list[dict]:
    return [
        {"poem": poem_id, "section": section, "paired": log.paired,
         "skipped_missing_a": log.skipped_missing_a,
         "skipped_missing_b": log.skipped_missing_b,
         "misalignment_warnings": log.misalignment_warnings}
        for section, log in (("before", table.log_before),
                             ("after", table.log_after))
    ]


def cmd_metre_split_tests(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "metre"
    poem = corpus.poem(args.poem)
    table = split_distribution_tests(
        poem, args.split_line, B=args.bootstrap, rng=RngStream(args.seed))
    write_table(out, f"split-tests-{poem.id}",
                ("poem", "split_line") + TEST_COLUMNS,
                _split_rows(table, poem.id), args.format)
    write_table(out, f"pairing-{poem.id}",
                ("poem", "section", "paired", "skipped_missing_a",
                 "skipped_missing_b", "misalignment_warnings"),
                _pairing_rows(table, poem.id), args.format)
    write_run_manifest(out, "metre split-tests", root, {
        "poem": args.poem, "split_line": args.split_line,
        "bootstrap": args.bootstrap, "format": args.format,
    }, args.seed)
    return 0


def cmd_metre_independence(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "metre"
    poem = corpus.poem(args.poem)
    result = halves_independence_test(poem, args.first, args.last)
    row = test_result_row("halves_independence", result)
    row["poem"] = poem.id
    write_table(out, f"independence-{poem.id}", ("poem",) + TEST_COLUMNS,
                [row], args.format)
    write_run_manifest(out, "metre independence", root, {
        "poem": args.poem, "first": args.first, "last": args.last,
        "format": args.format,
    }, args.seed)
    return 0


def cmd_metre_incidence(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "metre"
    poem = corpus.poem(args.poem)
    granularity = _granularity(args.granularity)
    points = incidence_points(poem, args.pattern, granularity)
    fit = cumulative_incidence_r(poem, args.pattern, granularity)
    write_table(out, f"incidence-{poem.id}-{args.pattern}",
                ("unit", "occurrence"),
                [{"unit": x, "occurrence": y} for x, y in points], args.format)
    write_table(out, f"incidence-fit-{poem.id}-{args.pattern}",
                ("poem", "pattern", "granularity", "slope", "intercept", "r",
                 "n"),
                [{"poem": poem.id, "pattern": args.pattern,
                  "granularity": args.granularity, "slope": fit.slope,
                  "intercept": fit.intercept, "r": fit.r, "n": fit.n}],
                args.format)
    _write_svg(out, f"incidence-{poem.id}-{args.pattern}", FigureSpec(
        kind=FigureKind.SCATTER_FIT,
        series=((args.pattern, tuple((float(x), float(y)) for x, y in points)),),
        title=f"{poem.id}: cumulative incidence of {args.pattern}",
        x_label="unit index", y_label="occurrence number"))
    write_run_manifest(out, "metre incidence-r", root, {
        "poem": args.poem, "pattern": args.pattern,
        "granularity": args.granularity, "format": args.format,
    }, args.seed)
    return 0


def _fit_row(unit: str, first: int, last: int, series, fit) -> dict:
    return {"unit": unit, "first_line": first, "last_line": last,
            "slope_per100": fit.slope * 100.0, "intercept": fit.intercept,
            "r": fit.r, "n_hapax": series[-1][1]}


def cmd_hapax_fit(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "hapax"
    poem = corpus.poem(args.poem)
    index = build_compound_index(corpus)
    first = args.first or 1
    last = args.last or poem.line_count
    series, fit = hapax_cumulative_fit(poem, index.hapax_set, first, last)
    write_table(out, f"series-{poem.id}", ("line", "cumulative"),
                [{"line": x, "cumulative": y} for x, y in series], args.format)
    write_table(out, f"fit-{poem.id}", FIT_COLUMNS,
                [_fit_row(poem.id, first, last, series, fit)], args.format)
    _write_svg(out, f"hapax-{poem.id}", FigureSpec(
        kind=FigureKind.SCATTER_FIT,
        series=((poem.id, tuple((float(x), float(y)) for x, y in series)),),
        title=f"{poem.id}: cumulative hapax compounds",
        x_label="line", y_label="cumulative hapax count"))
    write_run_manifest(out, "hapax fit", root, {
        "poem": args.poem, "first": args.first, "last": args.last,
        "format": args.format,
    }, args.seed)
    return 0


def _parse_unit(corpus: Corpus, spec: str) -> tuple[Poem, int | None, int | None]:
    poem_id, _, span = spec.partition(":")
    poem = corpus.poem(poem_id)
    if not span:
        return poem, None, None
    first_text, sep, last_text = span.partition("-")
    if not sep:
        raise AnalysisError(f"bad unit spec {spec!r}: expected POEM[:FIRST-LAST]")
    try:
        return poem, int(first_text), int(last_text)
    except ValueError:
        raise AnalysisError(f"bad unit spec {spec!r}: expected POEM[:FIRST-LAST]")


def cmd_hapax_segments(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "hapax"
    index = build_compound_index(corpus)
    units = [_parse_unit(corpus, spec) for spec in args.unit]
    mode = SegmentMode(args.mode)
    fits, combined = segment_fits(units, mode, index.hapax_set)
    rows = []
    for (poem, first, last), fit in zip(units, fits):
        lo = first or 1
        hi = last or poem.line_count
        series, _ = hapax_cumulative_fit(poem, index.hapax_set, lo, hi)
        rows.append(_fit_row(f"{poem.id}:{lo}-{hi}", lo, hi, series, fit))
    total_hapax = sum(row["n_hapax"] for row in rows)
    total_lines = sum(row["last_line"] - row["first_line"] + 1 for row in rows)
    combined_span = (1, total_lines) if mode is SegmentMode.MERGE else (
        min(r["first_line"] for r in rows), max(r["last_line"] for r in rows))
    rows.append({"unit": "combined", "first_line": combined_span[0],
                 "last_line": combined_span[1],
                 "slope_per100": combined.slope * 100.0,
                 "intercept": combined.intercept, "r": combined.r,
                 "n_hapax": total_hapax})
    write_table(out, f"segments-{args.mode}", FIT_COLUMNS, rows, args.format)
    write_run_manifest(out, "hapax segments", root, {
        "mode": args.mode, "units": list(args.unit), "format": args.format,
    }, args.seed)
    return 0


def _pair_rows(scores) -> list[dict]:
    return [
        {"poem_a": s.poem_a, "poem_b": s.poem_b,
         "observed": s.observed_shared, "null_mean": s.null_mean,
         "null_sd": s.null_sd, "z": s.z, "tail": s.empirical_tail}
        for s in scores
    ]


def cmd_shared(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "shared"
    poems = args.poems.split(",") if args.poems else None
    scores = shared_compound_scores(
        corpus, poems=poems, N=args.trials, rng=RngStream(args.seed))
    write_table(out, "pairs", PAIR_COLUMNS, _pair_rows(scores), args.format)
    write_run_manifest(out, "shared", root, {
        "poems": args.poems, "trials": args.trials, "format": args.format,
    }, args.seed)
    return 0


def _cluster_windows(corpus: Corpus, poems: Sequence[str] | None,
                     width: int, step: int):
    ids = poems if poems else [p.id for p in corpus.poems]
    windows = []
    for pid in ids:
        windows.extend(rolling_windows(corpus.poem(pid), width, step))
    if len(windows) < 2:
        raise AnalysisError(
            f"need at least two {width}-line windows across poems {list(ids)}")
    return windows


def _composition_text(window) -> str:
    return "+".join(f"{name}:{count}"
                    for name, count in window.composition.items())


def cmd_cluster_profiles(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "cluster"
    poems = args.poems.split(",") if args.poems else None
    windows = _cluster_windows(corpus, poems, args.width, args.step)
    profiles = build_profiles(corpus, windows, args.n, args.k)
    columns = ("sample",) + profiles[0].features
    rows = []
    for profile in profiles:
        row: dict[str, object] = {"sample": window_id(profile.sample)}
        row.update(zip(profile.features, profile.values))
        rows.append(row)
    write_table(out, "features", columns, rows, args.format)
    write_run_manifest(out, "cluster profiles", root, {
        "poems": args.poems, "width": args.width, "step": args.step,
        "n": args.n, "k": args.k, "format": args.format,
    }, args.seed)
    return 0


def cmd_cluster_dendrogram(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "cluster"
    poems = args.poems.split(",") if args.poems else None
    windows = _cluster_windows(corpus, poems, args.width, args.step)
    profiles = build_profiles(corpus, windows, args.n, args.k)
    dist = cosine_distance_matrix(profiles)
    tree = agglomerative_complete(dist)
    rows = []
    for i, label in enumerate(dist.labels):
        row: dict[str, object] = {"sample": label}
        row.update(zip(dist.labels, (float(v) for v in dist.values[i])))
        rows.append(row)
    write_table(out, "distances", ("sample",) + dist.labels, rows, args.format)
    _write_text(out / "dendrogram.json", json.dumps({
        "leaves": list(tree.leaves),
        "merges": [[a, b, h] for a, b, h in tree.merges],
    }, indent=2, ensure_ascii=False) + "\n")
    sublabels = tuple(_composition_text(w) for w in windows)
    _write_svg(out, "dendrogram", FigureSpec(
        kind=FigureKind.DENDROGRAM,
        series=(("tree", tree), ("sublabels", sublabels)),
        title="complete-linkage dendrogram (cosine distance)",
        y_label="cosine distance"))
    write_run_manifest(out, "cluster dendrogram", root, {
        "poems": args.poems, "width": args.width, "step": args.step,
        "n": args.n, "k": args.k, "format": args.format,
    }, args.seed)
    return 0


def _int_list(text: str) -> list[int]:
    if ":" in text:
        first, last, step = (int(v) for v in text.split(":"))
        return list(range(first, last + 1, step))
    return [int(v) for v in text.split(",")]


def _sweep_outputs(out: Path, result, fmt: str) -> None:
    rows = [
        {"n": cell.n, "k": cell.k, "sample": sample, "cluster": label}
        for cell in result.cells if cell.assignment is not None
        for sample, label in cell.assignment
    ]
    write_table(out, "sweep", ("n", "k", "sample", "cluster"), rows, fmt)
    _write_text(out / "sweep.json", json.dumps({
        "poem": result.poem,
        "stability": result.stability,
        "window_ids": list(result.window_ids),
        "cells": [{"n": c.n, "k": c.k, "populated": c.assignment is not None}
                  for c in result.cells],
    }, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    strip_series = []
    for cell in result.cells:
        values = (tuple(label for _, label in cell.assignment)
                  if cell.assignment is not None
                  else tuple(None for _ in result.window_ids))
        strip_series.append((f"n={cell.n} k={cell.k}", values))
    _write_svg(out, "sweep", FigureSpec(
        kind=FigureKind.SWEEP_STRIP, series=tuple(strip_series),
        title=f"{result.poem}: top-two cluster sweep",
        x_label="window (in line order)"))


def cmd_cluster_sweep(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out) / "cluster"
    result = robustness_sweep(
        corpus, args.poem, n_values=_int_list(args.n_values),
        k_values=_int_list(args.k_values), width=args.width, step=args.step)
    _sweep_outputs(out, result, args.format)
    write_run_manifest(out, "cluster sweep", root, {
        "poem": args.poem, "n_values": args.n_values,
        "k_values": args.k_values, "width": args.width, "step": args.step,
        "format": args.format,
    }, args.seed)
    return 0


# ---------------------------------------------------------------- report ----

def cmd_report(args: argparse.Namespace) -> int:
    corpus, root = _load_corpus(args)
    out = Path(args.out)
    fmt = args.format
    skipped: list[dict] = []

    def skip(analysis: str, unit: str, exc: Exception) -> None:
        skipped.append({"analysis": analysis, "unit": unit,
                        "reason": str(exc)})

    # corpus summary
    summary_rows = []
    for poem in corpus.poems:
        scanned = sum(1 for ln in poem.lines
                      if ln.a_pattern is not None or ln.b_pattern is not None)
        tokens = sum(len(ln.compounds) for ln in poem.lines)
        summary_rows.append({
            "poem": poem.id, "lines": poem.line_count,
            "parts": "+".join(p.name for p in poem.parts),
            "scanned_lines": scanned, "compound_tokens": tokens,
        })
    write_table(out / "corpus", "summary",
                ("poem", "lines", "parts", "scanned_lines", "compound_tokens"),
                summary_rows, fmt)

    # sense pauses: every poem pair, 100-line samples
    ratio_rows, ttest_rows, syllable_rows = [], [], []
    for poem in corpus.poems:
        syllable_rows.append({
            "poem": poem.id, "part": "",
            "mean_syllables": mean_syllables_per_line(list(poem.lines))})
    for i, poem_a in enumerate(corpus.poems):
        for poem_b in corpus.poems[i + 1:]:
            try:
                reports_a, reports_b, result = sample_ratio_comparison(
                    poem_a, poem_b, 100)
            except AnalysisError as exc:
                skip("sensepause", f"{poem_a.id}/{poem_b.id}", exc)
                continue
            for row in _ratio_rows(reports_a) + _ratio_rows(reports_b):
                if row not in ratio_rows:
                    ratio_rows.append(row)
            row = test_result_row("intraline_ratio_t", result)
            row["poem_a"], row["poem_b"] = poem_a.id, poem_b.id
            ttest_rows.append(row)
    if ratio_rows:
        write_table(out / "sensepause", "ratios",
                    ("unit", "intraline", "final", "ratio"), ratio_rows, fmt)
    if ttest_rows:
        write_table(out / "sensepause", "ttests",
                    ("poem_a", "poem_b") + TEST_COLUMNS, ttest_rows, fmt)
    write_table(out / "sensepause", "syllables",
                ("poem", "part", "mean_syllables"), syllable_rows, fmt)

    # metre battery per scanned poem
    split_rows, pairing_rows, independence_rows, incidence_rows = [], [], [], []
    for poem in corpus.poems:
        if all(ln.a_pattern is None and ln.b_pattern is None
               for ln in poem.lines):
            continue
        if 1 <= args.split_line < poem.line_count:
            try:
                table = split_distribution_tests(
                    poem, args.split_line, B=args.bootstrap,
                    rng=RngStream(args.seed))
                split_rows.extend(_split_rows(table, poem.id))
                pairing_rows.extend(_pairing_rows(table, poem.id))
            except AnalysisError as exc:
                skip("metre split-tests", poem.id, exc)
        else:
            skip("metre split-tests", poem.id,
                 AnalysisError(f"split line {args.split_line} outside poem"))
        try:
            rolling = rolling_pattern_proportions(
                poem, Granularity.HALF_LINE, 200, 100)
            columns, rows = _proportions_rows(rolling)
            write_table(out / "metre", f"proportions-{poem.id}", columns, rows,
                        fmt)
            _write_svg(out / "metre", f"rolling-{poem.id}", _stacked_spec(
                rolling, f"{poem.id}: rolling half-line proportions",
                args.split_line if 1 <= args.split_line < poem.line_count
                else None))
        except (AnalysisError, ValueError) as exc:
            skip("metre rolling", poem.id, exc)
        try:
            result = halves_independence_test(poem, None, None)
            row = test_result_row("halves_independence", result)
            row["poem"] = poem.id
            independence_rows.append(row)
        except AnalysisError as exc:
            skip("metre independence", poem.id, exc)
        try:
            counts = pattern_counts(poem, Granularity.FULL_LINE)
            best = max(zip(counts.counts, counts.labels),
                       key=lambda pair: (pair[0], pair[1]))
            if best[0] >= 2:
                pattern = best[1]
                fit = cumulative_incidence_r(poem, pattern,
                                             Granularity.FULL_LINE)
                incidence_rows.append({
                    "poem": poem.id, "pattern": pattern,
                    "granularity": "full", "slope": fit.slope,
                    "intercept": fit.intercept, "r": fit.r, "n": fit.n})
        except AnalysisError as exc:
            skip("metre incidence-r", poem.id, exc)
    if split_rows:
        write_table(out / "metre", "split-tests",
                    ("poem", "split_line") + TEST_COLUMNS, split_rows, fmt)
        write_table(out / "metre", "pairing",
                    ("poem", "section", "paired", "skipped_missing_a",
                     "skipped_missing_b", "misalignment_warnings"),
                    pairing_rows, fmt)
    if independence_rows:
        write_table(out / "metre", "independence", ("poem",) + TEST_COLUMNS,
                    independence_rows, fmt)
    if incidence_rows:
        write_table(out / "metre", "incidence",
                    ("poem", "pattern", "granularity", "slope", "intercept",
                     "r", "n"), incidence_rows, fmt)

    # hapax compounds and type-token ratios
    index = build_compound_index(corpus)
    fit_rows, ttr_rows = [], []
    for poem in corpus.poems:
        ratio = type_token_ratio(poem)
        tokens = sum(len(ln.compounds) for ln in poem.lines)
        ttr_rows.append({"poem": poem.id, "tokens": tokens,
                         "types": round(ratio * tokens) if ratio else 0,
                         "ttr": ratio})
        try:
            series, fit = hapax_cumulative_fit(poem, index.hapax_set)
        except AnalysisError as exc:
            skip("hapax fit", poem.id, exc)
            continue
        fit_rows.append(_fit_row(poem.id, 1, poem.line_count, series, fit))
        write_table(out / "hapax", f"series-{poem.id}", ("line", "cumulative"),
                    [{"line": x, "cumulative": y} for x, y in series], fmt)
        _write_svg(out / "hapax", f"hapax-{poem.id}", FigureSpec(
            kind=FigureKind.SCATTER_FIT,
            series=((poem.id, tuple((float(x), float(y)) for x, y in series)),),
            title=f"{poem.id}: cumulative hapax compounds",
            x_label="line", y_label="cumulative hapax count"))
    if fit_rows:
        write_table(out / "hapax", "fits", FIT_COLUMNS, fit_rows, fmt)
    write_table(out / "hapax", "ttr", ("poem", "tokens", "types", "ttr"),
                ttr_rows, fmt)

    # shared compounds
    compound_poems = [p.id for p in corpus.poems
                      if any(ln.compounds for ln in p.lines)]
    if len(compound_poems) >= 2:
        scores = shared_compound_scores(
            corpus, poems=compound_poems, N=args.trials,
            rng=RngStream(args.seed))
        write_table(out / "shared", "pairs", PAIR_COLUMNS, _pair_rows(scores),
                    fmt)
    else:
        skip("shared", ",".join(compound_poems) or "(none)",
             AnalysisError("fewer than two poems with compound annotations"))

    # clustering across the corpus, sweep on the longest poem
    try:
        windows = _cluster_windows(corpus, None, 300, 100)
        profiles = build_profiles(corpus, windows, 3, 500)
        dist = cosine_distance_matrix(profiles)
        tree = agglomerative_complete(dist)
        _write_text(out / "cluster" / "dendrogram.json", json.dumps({
            "leaves": list(tree.leaves),
            "merges": [[a, b, h] for a, b, h in tree.merges],
        }, indent=2, ensure_ascii=False) + "\n")
        _write_svg(out / "cluster", "dendrogram", FigureSpec(
            kind=FigureKind.DENDROGRAM,
            series=(("tree", tree),
                    ("sublabels", tuple(_composition_text(w) for w in windows))),
            title="complete-linkage dendrogram (cosine distance)",
            y_label="cosine distance"))
        assignment = top_two_assignment(tree)
        truth = {window_id(w): majority_part(w) for w in windows}
        purity, ari = clustering_quality(assignment, truth)
        _write_text(out / "cluster" / "quality.json", json.dumps(
            {"purity": purity, "adjusted_rand": ari}, indent=2,
            sort_keys=True) + "\n")
    except AnalysisError as exc:
        skip("cluster dendrogram", "(corpus)", exc)
    sweep_target = max(corpus.poems, key=lambda p: (p.line_count, p.id))
    try:
        # trimmed grid keeps the battery fast; the sweep subcommand runs the
        # full one
        result = robustness_sweep(
            corpus, sweep_target.id, n_values=[2, 3],
            k_values=[100, 200, 300, 400, 500], width=300, step=100)
        _sweep_outputs(out / "cluster", result, fmt)
    except AnalysisError as exc:
        skip("cluster sweep", sweep_target.id, exc)

    write_table(out / "report", "skipped", ("analysis", "unit", "reason"),
                skipped, fmt)
    write_run_manifest(out, "report", root, {
        "split_line": args.split_line, "bootstrap": args.bootstrap,
        "trials": args.trials, "format": fmt,
    }, args.seed)
    return 0


# ---------------------------------------------------------------- parser ----

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="root RNG seed (default 0)")
    common.add_argument("--out", default="out",
                        help="output directory (default out/)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format (default csv)")
    return common


def _corpus_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--corpus", required=True,
                        help="canonical corpus directory")
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    with_corpus = _corpus_parser()
    parser = argparse.ArgumentParser(
        prog="versemetry",
        description="Stylometric analyses over annotated verse corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", parents=[common],
                             help="convert an external dataset")
    convert.add_argument("dataset", help="dataset root directory")
    convert.set_defaults(func=cmd_convert)

    sense = sub.add_parser("sensepause", parents=[common, with_corpus],
                           help="sense-pause ratios and t-test")
    sense.add_argument("--poem-a", required=True)
    sense.add_argument("--poem-b", required=True)
    sense.add_argument("--part-a", default=None)
    sense.add_argument("--part-b", default=None)
    sense.add_argument("--sample-len", type=int, default=100)
    sense.add_argument("--strict-compat", action="store_true",
                       help="reproduce the uncorrected legacy classification")
    sense.add_argument("--ascii-quotes", action="store_true")
    sense.add_argument("--no-count-hyphen", action="store_true")
    sense.set_defaults(func=cmd_sensepause)

    metre = sub.add_parser("metre", help="metrical pattern analyses")
    metre_sub = metre.add_subparsers(dest="subcommand", required=True)

    rolling = metre_sub.add_parser("rolling", parents=[common, with_corpus])
    rolling.add_argument("--poem", required=True)
    rolling.add_argument("--granularity", choices=("half", "full"),
                         default="half")
    rolling.add_argument("--width", type=int, default=200)
    rolling.add_argument("--step", type=int, default=1)
    rolling.add_argument("--split-line", type=int, default=None,
                         help="draw a vertical marker at this line")
    rolling.set_defaults(func=cmd_metre_rolling)

    split = metre_sub.add_parser("split-tests", parents=[common, with_corpus])
    split.add_argument("--poem", required=True)
    split.add_argument("--split-line", type=int, default=DEFAULT_SPLIT_LINE)
    split.add_argument("--bootstrap", type=int, default=20000,
                       help="bootstrap replicates (default 20000)")
    split.set_defaults(func=cmd_metre_split_tests)

    indep = metre_sub.add_parser("independence", parents=[common, with_corpus])
    indep.add_argument("--poem", required=True)
    indep.add_argument("--first", type=int, default=None)
    indep.add_argument("--last", type=int, default=None)
    indep.set_defaults(func=cmd_metre_independence)

    incidence = metre_sub.add_parser("incidence-r",
                                     parents=[common, with_corpus])
    incidence.add_argument("--poem", required=True)
    incidence.add_argument("--pattern", required=True,
                           help=f"one of {'/'.join(HALF_LABELS)} or "
                                f"{FULL_LABELS[0]}-style full-line labels")
    incidence.add_argument("--granularity", choices=("half", "full"),
                           default="half")
    incidence.set_defaults(func=cmd_metre_incidence)

    hapax = sub.add_parser("hapax", help="hapax compound regressions")
    hapax_sub = hapax.add_subparsers(dest="subcommand", required=True)

    fit = hapax_sub.add_parser("fit", parents=[common, with_corpus])
    fit.add_argument("--poem", required=True)
    fit.add_argument("--first", type=int, default=None)
    fit.add_argument("--last", type=int, default=None)
    fit.set_defaults(func=cmd_hapax_fit)

    segments = hapax_sub.add_parser("segments", parents=[common, with_corpus])
    segments.add_argument("--mode", choices=("partition", "merge"),
                          required=True)
    segments.add_argument("--unit", action="append", required=True,
                          help="POEM[:FIRST-LAST]; repeat for each unit")
    segments.set_defaults(func=cmd_hapax_segments)

    shared = sub.add_parser("shared", parents=[common, with_corpus],
                            help="shared-compound null-model scores")
    shared.add_argument("--poems", default=None,
                        help="comma-separated poem ids (default: all)")
    shared.add_argument("--trials", type=int, default=1000)
    shared.set_defaults(func=cmd_shared)

    cluster = sub.add_parser("cluster", help="character n-gram clustering")
    cluster_sub = cluster.add_subparsers(dest="subcommand", required=True)

    def add_cluster_params(p, with_poems=True):
        if with_poems:
            p.add_argument("--poems", default=None,
                           help="comma-separated poem ids (default: all)")
        p.add_argument("--width", type=int, default=300)
        p.add_argument("--step", type=int, default=100)

    profiles = cluster_sub.add_parser("profiles", parents=[common, with_corpus])
    add_cluster_params(profiles)
    profiles.add_argument("--n", type=int, default=3)
    profiles.add_argument("--k", type=int, default=500)
    profiles.set_defaults(func=cmd_cluster_profiles)

    dendro = cluster_sub.add_parser("dendrogram",
                                    parents=[common, with_corpus])
    add_cluster_params(dendro)
    dendro.add_argument("--n", type=int, default=3)
    dendro.add_argument("--k", type=int, default=500)
    dendro.set_defaults(func=cmd_cluster_dendrogram)

    sweep = cluster_sub.add_parser("sweep", parents=[common, with_corpus])
    sweep.add_argument("--poem", required=True)
    add_cluster_params(sweep, with_poems=False)
    sweep.add_argument("--n-values", default="2,3,4,5",
                       help="comma list or FIRST:LAST:STEP")
    sweep.add_argument("--k-values", default="100:1000:50",
                       help="comma list or FIRST:LAST:STEP")
    sweep.set_defaults(func=cmd_cluster_sweep)

    report = sub.add_parser("report", parents=[common, with_corpus],
                            help="run the full battery")
    report.add_argument("--split-line", type=int, default=DEFAULT_SPLIT_LINE)
    report.add_argument("--bootstrap", type=int, default=20000)
    report.add_argument("--trials", type=int, default=1000)
    report.set_defaults(func=cmd_report)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (VersemetryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
