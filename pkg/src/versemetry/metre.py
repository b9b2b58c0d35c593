"""Metrical pattern tabulation and distribution-shift analyses.

Half-lines carry one of five scansion types A-E; a full line is the ordered
pair of its half-line types (25 possible patterns).  The label universe is
fixed and zero counts are retained so degrees of freedom are stable across
sections; empty categories are dropped (and flagged) inside the stats layer.

Full-line pairing follows the sequential rule: a line contributes a pattern
only when both halves are scanned.  Missing halves are skipped and logged,
never repaired, and every missing half increments a misalignment warning
counter because a gap can desynchronize naive sequential pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import Poem
from .errors import AnalysisError
from .stats import (
    BootstrapStat,
    LinearFit,
    RngStream,
    TestMethod,
    TestResult,
    bootstrap_null_p,
    chi2_gof,
    chi2_homogeneity,
    chi2_independence,
    ols_fit,
)

__all__ = [
    "Granularity",
    "HALF_LABELS",
    "FULL_LABELS",
    "DEFAULT_SPLIT_LINE",
    "ALTERNATIVE_SPLIT_LINE",
    "PatternCounts",
    "PairingLog",
    "RollingProportions",
    "SplitTestTable",
    "pair_full_lines",
    "pattern_counts",
    "rolling_pattern_proportions",
    "incidence_points",
    "cumulative_incidence_r",
    "split_distribution_tests",
    "halves_independence_test",
]

HALF_LABELS: tuple[str, ...] = ("A", "B", "C", "D", "E")
FULL_LABELS: tuple[str, ...] = tuple(a + b for a in HALF_LABELS for b in HALF_LABELS)

# canonical split used throughout, plus the scribal-hand alternative
DEFAULT_SPLIT_LINE = 2300
ALTERNATIVE_SPLIT_LINE = 1939


class Granularity(Enum):
    HALF_LINE = "half"
    FULL_LINE = "full"


@dataclass(frozen=True)
class PatternCounts:
    granularity: Granularity
    labels: tuple[str, ...]
    counts: tuple[int, ...]
    section: tuple[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class PairingLog:
    """Bookkeeping for sequential full-line pairing over a line range.

    ``paired + skipped_missing_a + skipped_missing_b`` equals the number of
    lines in the range; ``misalignment_warnings`` counts missing halves (a
    line missing both halves contributes two).
    """

    paired: int
    skipped_missing_a: int
    skipped_missing_b: int
    misalignment_warnings: int


@dataclass(frozen=True)
class RollingProportions:
    granularity: Granularity
    width: int
    step: int
    starts: tuple[int, ...]
    series: dict[str, tuple[float, ...]]


@dataclass(frozen=True)
class SplitTestTable:
    split_line: int
    half_homogeneity: TestResult
    half_gof: TestResult
    full_homogeneity: TestResult
    full_gof: TestResult
    full_homogeneity_boot: TestResult
    full_gof_boot: TestResult
    log_before: PairingLog
    log_after: PairingLog


def _require_scansion(poem: Poem) -> None:
    if not any(ln.a_pattern or ln.b_pattern for ln in poem.lines):
        raise AnalysisError(f"poem {poem.id} unscanned")


def _resolve_range(poem: Poem, first: int | None, last: int | None) -> tuple[int, int]:
    lo = 1 if first is None else first
    hi = poem.line_count if last is None else last
    if not 1 <= lo <= hi <= poem.line_count:
        raise AnalysisError(
            f"poem {poem.id}: bad line range {lo}-{hi} (poem has {poem.line_count})")
    return lo, hi


def pair_full_lines(poem: Poem, first: int | None = None,
                    last: int | None = None) -> tuple[list[str], PairingLog]:
    """Sequential full-line patterns over a range, with skip accounting."""
    _require_scansion(poem)
    lo, hi = _resolve_range(poem, first, last)
    patterns = []
    missing_a = missing_b = warnings = 0
    for ln in poem.lines[lo - 1:hi]:
        if ln.a_pattern is None:
            missing_a += 1
            warnings += 1 if ln.b_pattern is not None else 2
        elif ln.b_pattern is None:
            missing_b += 1
            warnings += 1
        else:
            patterns.append(ln.a_pattern + ln.b_pattern)
    return patterns, PairingLog(len(patterns), missing_a, missing_b, warnings)


def pattern_counts(poem: Poem, granularity: Granularity,
                   first: int | None = None, last: int | None = None) -> PatternCounts:
    """Label counts over the fixed label order, zeros retained."""
    _require_scansion(poem)
    lo, hi = _resolve_range(poem, first, last)
    if granularity is Granularity.HALF_LINE:
        tally = dict.fromkeys(HALF_LABELS, 0)
        for ln in poem.lines[lo - 1:hi]:
            if ln.a_pattern is not None:
                tally[ln.a_pattern] += 1
            if ln.b_pattern is not None:
                tally[ln.b_pattern] += 1
        labels = HALF_LABELS
    else:
        patterns, _ = pair_full_lines(poem, lo, hi)
        tally = dict.fromkeys(FULL_LABELS, 0)
        for pat in patterns:
            tally[pat] += 1
        labels = FULL_LABELS
    return PatternCounts(
        granularity=granularity,
        labels=labels,
        counts=tuple(tally[lab] for lab in labels),
        section=(lo, hi),
    )


def _per_line_label_matrix(poem: Poem, granularity: Granularity) -> np.ndarray:
    """(line_count, n_labels) matrix of label incidences per line."""
    if granularity is Granularity.HALF_LINE:
        labels = HALF_LABELS
        index = {lab: i for i, lab in enumerate(labels)}
        m = np.zeros((poem.line_count, len(labels)), dtype=np.int64)
        for row, ln in enumerate(poem.lines):
            if ln.a_pattern is not None:
                m[row, index[ln.a_pattern]] += 1
            if ln.b_pattern is not None:
                m[row, index[ln.b_pattern]] += 1
    else:
        labels = FULL_LABELS
        index = {lab: i for i, lab in enumerate(labels)}
        m = np.zeros((poem.line_count, len(labels)), dtype=np.int64)
        for row, ln in enumerate(poem.lines):
            if ln.a_pattern is not None and ln.b_pattern is not None:
                m[row, index[ln.a_pattern + ln.b_pattern]] += 1
    return m


def rolling_pattern_proportions(
    poem: Poem,
    granularity: Granularity,
    width: int = 200,
    step: int = 1,
) -> RollingProportions:
    """Per-label proportions over rolling windows, keyed by window start.

    Windows containing no scanned units produce no data point.
    """
    _require_scansion(poem)
    if width < 1 or step < 1:
        raise ValueError("width and step must be at least 1")
    labels = HALF_LABELS if granularity is Granularity.HALF_LINE else FULL_LABELS
    m = _per_line_label_matrix(poem, granularity)
    if poem.line_count < width:
        return RollingProportions(granularity, width, step, (),
                                  {lab: () for lab in labels})
    prefix = np.zeros((poem.line_count + 1, m.shape[1]), dtype=np.int64)
    np.cumsum(m, axis=0, out=prefix[1:])
    starts_all = np.arange(1, poem.line_count - width + 2, step)
    window_counts = prefix[starts_all + width - 1] - prefix[starts_all - 1]
    totals = window_counts.sum(axis=1)
    keep = totals > 0
    props = window_counts[keep] / totals[keep, None]
    starts = tuple(int(s) for s in starts_all[keep])
    series = {lab: tuple(props[:, i]) for i, lab in enumerate(labels)}
    return RollingProportions(granularity, width, step, starts, series)


def incidence_points(poem: Poem, pattern: str,
                     granularity: Granularity) -> list[tuple[int, int]]:
    """(unit index, occurrence number) points for one pattern.

    The n-th occurrence of the pattern contributes the point (unit index, n);
    half-line units count every half position, full-line units use the line
    index.
    """
    _require_scansion(poem)
    xs = []
    if granularity is Granularity.HALF_LINE:
        if pattern not in HALF_LABELS:
            raise AnalysisError(f"unknown half-line pattern {pattern!r}")
        unit = 0
        for ln in poem.lines:
            for half in (ln.a_pattern, ln.b_pattern):
                unit += 1
                if half == pattern:
                    xs.append(unit)
    else:
        if pattern not in FULL_LABELS:
            raise AnalysisError(f"unknown full-line pattern {pattern!r}")
        for ln in poem.lines:
            if ln.a_pattern is not None and ln.b_pattern is not None:
                if ln.a_pattern + ln.b_pattern == pattern:
                    xs.append(ln.index)
    return [(x, i + 1) for i, x in enumerate(xs)]


def cumulative_incidence_r(poem: Poem, pattern: str,
                           granularity: Granularity) -> LinearFit:
    """Fit occurrence number against unit index for one pattern.

    Replicates the original cumulative-incidence metric via incidence_points.
    Both coordinates are monotone increasing by construction, which is why r
    stays near 1 even under large density drift; the fit is exposed so that
    insensitivity is demonstrable.
    """
    points = incidence_points(poem, pattern, granularity)
    if len(points) < 2:
        raise AnalysisError(
            f"pattern {pattern!r} occurs fewer than twice in {poem.id}")
    return ols_fit([x for x, _ in points], [y for _, y in points])


def split_distribution_tests(
    poem: Poem,
    split_line: int = DEFAULT_SPLIT_LINE,
    B: int = 20000,
    rng: RngStream | None = None,
) -> SplitTestTable:
    """Half- and full-line distribution tests before/after ``split_line``.

    Four analytic results (homogeneity and goodness of fit at each
    granularity, before-section as the GOF reference) plus bootstrap
    empirical p-values for the two full-line tests.  ``rng`` defaults to
    RngStream(0); the bootstrap resamples full-line patterns at line level.
    """
    _require_scansion(poem)
    if not 1 <= split_line < poem.line_count:
        raise AnalysisError(
            f"split line {split_line} not strictly inside poem {poem.id}")
    if rng is None:
        rng = RngStream(0)

    half_before = pattern_counts(poem, Granularity.HALF_LINE, 1, split_line)
    half_after = pattern_counts(poem, Granularity.HALF_LINE, split_line + 1)
    full_before = pattern_counts(poem, Granularity.FULL_LINE, 1, split_line)
    full_after = pattern_counts(poem, Granularity.FULL_LINE, split_line + 1)
    patterns_before, log_before = pair_full_lines(poem, 1, split_line)
    patterns_after, log_after = pair_full_lines(poem, split_line + 1)
    if half_before.total == 0 or half_after.total == 0:
        raise AnalysisError("degenerate split: a section has no scanned halves")
    if not patterns_before or not patterns_after:
        raise AnalysisError("degenerate split: a section has no paired lines")

    try:
        half_hom = chi2_homogeneity(half_before.counts, half_after.counts)
        half_gof = chi2_gof(half_after.counts, half_before.counts)
        full_hom = chi2_homogeneity(full_before.counts, full_after.counts)
        full_gof = chi2_gof(full_after.counts, full_before.counts)
    except AnalysisError as exc:
        raise AnalysisError(f"degenerate split: {exc}")

    pooled = patterns_before + patterns_after
    n_b, n_a = len(patterns_before), len(patterns_after)
    p_hom = bootstrap_null_p(pooled, n_b, n_a, full_hom.statistic,
                             BootstrapStat.HOMOGENEITY, B, rng.substream(0))
    p_gof = bootstrap_null_p(pooled, n_b, n_a, full_gof.statistic,
                             BootstrapStat.GOF, B, rng.substream(1))
    boot_hom = TestResult(full_hom.statistic, None, p_hom,
                          TestMethod.BOOTSTRAP_EMPIRICAL, n_b + n_a)
    boot_gof = TestResult(full_gof.statistic, None, p_gof,
                          TestMethod.BOOTSTRAP_EMPIRICAL, n_b + n_a)
    return SplitTestTable(
        split_line=split_line,
        half_homogeneity=half_hom,
        half_gof=half_gof,
        full_homogeneity=full_hom,
        full_gof=full_gof,
        full_homogeneity_boot=boot_hom,
        full_gof_boot=boot_gof,
        log_before=log_before,
        log_after=log_after,
    )


def halves_independence_test(poem: Poem, first: int | None = None,
                             last: int | None = None) -> TestResult:
    """Chi-square independence of (a_pattern, b_pattern) over paired lines."""
    _require_scansion(poem)
    lo, hi = _resolve_range(poem, first, last)
    index = {lab: i for i, lab in enumerate(HALF_LABELS)}
    table = np.zeros((5, 5), dtype=np.int64)
    for ln in poem.lines[lo - 1:hi]:
        if ln.a_pattern is not None and ln.b_pattern is not None:
            table[index[ln.a_pattern], index[ln.b_pattern]] += 1
    return chi2_independence(table)
