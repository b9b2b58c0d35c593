"""Compound-word analytics: hapax regressions and shared-compound nulls.

Hapax status is decided corpus-wide: a lemma is a hapax compound when its
total occurrence count across every poem in the index is exactly one.  The
cumulative regressions fit the running hapax count against the line index
(every line contributes a point, not only lines with hapaxes).

The shared-compound null model reallocates each compound type's occurrences
independently across poems with probability proportional to each poem's
compound token total, then recounts shared types per poem pair.  Types with a
single occurrence can never be shared and are skipped during simulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, Poem
from .errors import AnalysisError
from .stats import LinearFit, RngStream, ols_fit

__all__ = [
    "CompoundIndex",
    "PairScore",
    "SegmentMode",
    "build_compound_index",
    "hapax_cumulative_fit",
    "segment_fits",
    "shared_compound_scores",
    "type_token_ratio",
]


@dataclass(frozen=True)
class CompoundIndex:
    by_type: Mapping[str, tuple[tuple[str, int], ...]]
    totals: Mapping[str, int]
    hapax_set: frozenset[str]

    def poem_types(self, poem_id: str) -> frozenset[str]:
        return frozenset(
            lemma for lemma, places in self.by_type.items()
            if any(pid == poem_id for pid, _ in places))


@dataclass(frozen=True)
class PairScore:
    """Observed vs null-model shared compound types for one poem pair.

    ``z`` is (observed − null_mean)/null_sd; with a degenerate null (sd = 0)
    it is 0 when the observation matches the null mean and signed infinity
    otherwise.  ``empirical_tail`` is the fraction of trials with a shared
    count at least as large as observed.
    """

    poem_a: str
    poem_b: str
    observed_shared: int
    null_mean: float
    null_sd: float
    z: float
    empirical_tail: float


class SegmentMode(Enum):
    PARTITION = "partition"
    MERGE = "merge"


def build_compound_index(corpus: Corpus) -> CompoundIndex:
    """Corpus-wide compound inventory with hapax determination."""
    by_type: dict[str, list[tuple[str, int]]] = {}
    totals: dict[str, int] = {}
    for poem in corpus.poems:
        totals[poem.id] = 0
        for line in poem.lines:
            for lemma in line.compounds:
                by_type.setdefault(lemma, []).append((poem.id, line.index))
                totals[poem.id] += 1
    hapaxes = frozenset(
        lemma for lemma, places in by_type.items() if len(places) == 1)
    return CompoundIndex(
        by_type={lemma: tuple(places) for lemma, places in by_type.items()},
        totals=totals,
        hapax_set=hapaxes,
    )


def hapax_cumulative_fit(
    poem: Poem,
    hapax_set: frozenset[str],
    first: int | None = None,
    last: int | None = None,
) -> tuple[list[tuple[int, int]], LinearFit]:
    """Running hapax-token count per line and its least-squares fit.

    The series starts at zero within the range; x coordinates keep the
    original line numbering.  Raw per-line slope is returned (multiply by 100
    for the conventional per-100-line reporting scale).
    """
    lo = 1 if first is None else first
    hi = poem.line_count if last is None else last
    if not 1 <= lo <= hi <= poem.line_count:
        raise AnalysisError(
            f"poem {poem.id}: bad line range {lo}-{hi} (poem has {poem.line_count})")
    series = []
    running = 0
    for ln in poem.lines[lo - 1:hi]:
        running += sum(1 for lemma in ln.compounds if lemma in hapax_set)
        series.append((ln.index, running))
    if running == 0:
        raise AnalysisError("no hapax compounds in range")
    fit = ols_fit([x for x, _ in series], [y for _, y in series])
    return series, fit


def segment_fits(
    units: Sequence[tuple[Poem, int | None, int | None]],
    mode: SegmentMode,
    hapax_set: frozenset[str],
) -> tuple[list[LinearFit], LinearFit]:
    """Per-unit fits plus a combined fit.

    Partition mode fits each unit independently and then the union series of
    all units.  Merge mode concatenates the units in the given order with
    contiguous line renumbering before fitting, reproducing the adversarial
    merged-text demonstrations; per-unit fits are returned alongside.
    """
    if len(units) < 2:
        raise AnalysisError("need at least two units")

    unit_fits: list[LinearFit] = []
    xs: list[int] = []
    ys: list[int] = []
    offset = 0
    running = 0
    for poem, first, last in units:
        lo = 1 if first is None else first
        hi = poem.line_count if last is None else last
        series, fit = hapax_cumulative_fit(poem, hapax_set, lo, hi)
        unit_fits.append(fit)
        if mode is SegmentMode.MERGE:
            xs.extend(offset + (x - lo + 1) for x, _ in series)
            offset += hi - lo + 1
        else:
            xs.extend(x for x, _ in series)
        ys.extend(running + y for _, y in series)
        running += series[-1][1]
    combined = ols_fit(xs, ys)
    return unit_fits, combined


def type_token_ratio(poem: Poem) -> float | None:
    """Distinct compound types over compound tokens; None without tokens."""
    tokens = [lemma for ln in poem.lines for lemma in ln.compounds]
    if not tokens:
        return None
    return len(set(tokens)) / len(tokens)


def _null_shared_counts(
    multiplicities: Sequence[int],
    weights: np.ndarray,
    N: int,
    rng: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate the reallocation null.

    Returns (shared, assigned): ``shared`` is (N, P, P) shared-type counts,
    ``assigned`` is (N, P) reallocated token totals per poem.  Types are
    grouped by multiplicity so each group is simulated with one vectorized
    multinomial draw; single-occurrence types can never be present in two
    poems, so they contribute tokens but are skipped for presence counting.
    """
    P = weights.size
    shared = np.zeros((N, P, P), dtype=np.int64)
    assigned = np.zeros((N, P), dtype=np.int64)
    counts_by_m: dict[int, int] = {}
    for m in multiplicities:
        counts_by_m[m] = counts_by_m.get(m, 0) + 1
    gen = rng.generator()
    for m in sorted(counts_by_m):
        c = counts_by_m[m]
        draws = gen.multinomial(m, weights, size=(N, c))
        assigned += draws.sum(axis=1)
        if m >= 2:
            presence = (draws > 0).astype(np.int64)
            shared += np.einsum("ncp,ncq->npq", presence, presence)
    return shared, assigned


def shared_compound_scores(
    corpus: Corpus,
    poems: Sequence[str] | None = None,
    N: int = 1000,
    rng: RngStream | None = None,
) -> list[PairScore]:
    """Observed vs null shared-compound-type scores for every poem pair.

    Poems without compound tokens are excluded with a warning.  The result
    covers unordered pairs (a before b in the input order); the underlying
    relation is symmetric and diagonals are never reported.
    """
    if N < 1000:
        raise ValueError("N must be at least 1000")
    if rng is None:
        rng = RngStream(0)
    index = build_compound_index(corpus)
    ids = list(poems) if poems is not None else [p.id for p in corpus.poems]
    kept = []
    for pid in ids:
        if index.totals.get(pid, 0) == 0:
            warnings.warn(f"poem {pid} has no compound tokens; excluded")
        else:
            kept.append(pid)
    if len(kept) < 2:
        raise AnalysisError("need at least two poems with compounds")

    pos = {pid: i for i, pid in enumerate(kept)}
    totals = np.array([index.totals[pid] for pid in kept], dtype=float)
    weights = totals / totals.sum()

    multiplicities = []
    for lemma, places in index.by_type.items():
        relevant = [pid for pid, _ in places if pid in pos]
        if relevant:
            multiplicities.append(len(relevant))
    shared_null, _ = _null_shared_counts(multiplicities, weights, N, rng)

    observed = np.zeros((len(kept), len(kept)), dtype=np.int64)
    for lemma, places in index.by_type.items():
        present = sorted({pos[pid] for pid, _ in places if pid in pos})
        for i_idx in range(len(present)):
            for j_idx in range(i_idx + 1, len(present)):
                observed[present[i_idx], present[j_idx]] += 1

    scores = []
    for i in range(len(kept)):
        for j in range(i + 1, len(kept)):
            null_ij = shared_null[:, i, j]
            mean = float(null_ij.mean())
            sd = float(null_ij.std(ddof=1))
            obs = int(observed[i, j])
            if sd > 0:
                z = (obs - mean) / sd
            elif obs == mean:
                z = 0.0
            else:
                z = math.copysign(math.inf, obs - mean)
            tail = float(np.count_nonzero(null_ij >= obs)) / N
            scores.append(PairScore(
                poem_a=kept[i], poem_b=kept[j], observed_shared=obs,
                null_mean=mean, null_sd=sd, z=z, empirical_tail=tail,
            ))
    return scores
