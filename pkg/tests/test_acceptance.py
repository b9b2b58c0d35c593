"""System-level acceptance suite: nine numbered criteria.

Each test prints exactly one ``CRITERION n: PASS/FAIL`` line directly to the
terminal (bypassing capture) before asserting, so the verdict of every
criterion is visible in any pytest run.  Criterion 9 needs a converted copy
of the published corpus (directory named by the ``VERSEMETRY_DATASET``
environment variable, default ``<repo>/dataset``); it is skipped, not
failed, when that corpus is absent.
"""

import json
import os
import pathlib
import time

import numpy as np
import pytest

from helpers import (
    brute_force_complete,
    build_corpus,
    build_poem,
    drift_scansion_poem,
    iid_scansion_poem,
    null_allocated_compound_corpus,
    random_distance_matrix,
    split_change_scansion_poem,
    two_style_corpus,
)
from versemetry.cli import dispatch
from versemetry.corpus import (
    PartRange,
    Poem,
    SampleWindow,
    VerseLine,
    parse_corpus,
    rolling_windows,
    write_corpus,
)
from versemetry.lexicon import SegmentMode, build_compound_index, segment_fits, shared_compound_scores
from versemetry.metre import (
    Granularity,
    HALF_LABELS,
    cumulative_incidence_r,
    pattern_counts,
    split_distribution_tests,
)
from versemetry.ngramcluster import (
    agglomerative_complete,
    build_profiles,
    clustering_quality,
    cosine_distance_matrix,
    majority_part,
    split_boundary_estimate,
    top_two_assignment,
    window_id,
)
from versemetry.sensepause import (
    MarkPosition,
    SensePauseMark,
    classify_sense_pauses,
    mean_syllables_per_line,
)
from versemetry.stats import RngStream, chi2_gof, chi_square_p, student_t_p

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
SKEW_PROBS = [0.3, 0.25, 0.2, 0.15, 0.1]


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")


# ---------------------------------------------------------------- 1 ---------

def test_criterion_1_tail_probability_kernels(capsys):
    """student_t_p reproduces four published two-sided p-values to +-0.0005;
    chi_square_p matches the 50-digit oracle table to 1e-8 relative; < 1 s."""
    t0 = time.perf_counter()
    tuples = ((0.94, 6, 0.3838), (1.03, 9, 0.3319),
              (2.07, 27, 0.0483), (0.19, 7, 0.8567))
    results = [(t, df, want, student_t_p(t, df)) for t, df, want in tuples]
    misses = [(t, df, want, got) for t, df, want, got in results
              if abs(got - want) > 5e-4]

    rows = json.loads((FIXTURES / "chi2_oracle.json").read_text())
    worst_rel = max(
        abs(chi_square_p(row["x2"], row["df"]) - float(row["p"]))
        / float(row["p"])
        for row in rows
    )
    elapsed = time.perf_counter() - t0

    ok = not misses and worst_rel <= 1e-8 and elapsed < 1.0
    detail = (f"chi-square oracle worst rel err {worst_rel:.2e}, "
              f"{elapsed:.2f}s; t tuples: " + "; ".join(
                  f"({t},{df})->{got:.4f} vs {want:.4f}"
                  for t, df, want, got in results))
    verdict(capsys, 1, ok, detail)
    assert worst_rel <= 1e-8
    assert elapsed < 1.0
    assert not misses, (
        "student_t_p outside +-0.0005 of the published value for: "
        + "; ".join(f"t={t} df={df}: got {got:.6f}, published {want}"
                    for t, df, want, got in misses))


# ---------------------------------------------------------------- 2 ---------

def test_criterion_2_bootstrap_analytic_agreement(capsys):
    """|bootstrap p - analytic p| <= 0.02 at B=20000 on 20 seeded corpora.

    Compared on the full-line homogeneity statistic: its pooled-resampling
    bootstrap draws both sections from one source distribution, the same null
    the analytic test evaluates.  The goodness-of-fit bootstrap deliberately
    targets a wider null (it also resamples the reference section), so those
    two p-values are not expected to coincide and are exercised elsewhere.
    """
    t0 = time.perf_counter()
    sizes = np.linspace(1000, 5000, 20).astype(int)
    gaps, skipped = [], 0
    for r, n in enumerate(sizes):
        poem = iid_scansion_poem(f"p{r}", int(n), SKEW_PROBS, seed=400 + r)
        table = split_distribution_tests(poem, int(n) // 2, B=20000,
                                         rng=RngStream(500 + r))
        analytic = table.full_homogeneity.p_value
        if 0.05 <= analytic <= 0.95:
            gaps.append(abs(table.full_homogeneity_boot.p_value - analytic))
        else:
            skipped += 1
    elapsed = time.perf_counter() - t0

    worst = max(gaps) if gaps else float("nan")
    ok = bool(gaps) and worst <= 0.02 and elapsed < 60.0
    verdict(capsys, 2, ok,
            f"worst |boot-analytic| {worst:.4f} over {len(gaps)} corpora "
            f"({skipped} outside p band), {elapsed:.1f}s")
    assert gaps, "every corpus fell outside the analytic p band"
    assert max(gaps) <= 0.02
    assert elapsed < 60.0


# ---------------------------------------------------------------- 3 ---------

def test_criterion_3_pause_classification_fixes(capsys):
    """Corrected mode: final close-bracket counts as a line-final pause and
    editorial ellipsis dots are suppressed; strict-compatibility mode
    reproduces the opposite, historical behaviour.  Exact-match assertions."""
    poem = parse_corpus(FIXTURES / "errata").poem("errata")

    corrected_bracket = classify_sense_pauses(poem.line(1))
    strict_bracket = classify_sense_pauses(poem.line(1), strict_compat=True)
    corrected_dots = classify_sense_pauses(poem.line(2))
    strict_dots = classify_sense_pauses(poem.line(2), strict_compat=True)

    expected_corrected = [
        SensePauseMark("(", 1, MarkPosition.INTRALINE, False),
        SensePauseMark(")", 1, MarkPosition.FINAL, False),
    ]
    expected_strict = [
        SensePauseMark("(", 1, MarkPosition.INTRALINE, False),
        SensePauseMark(")", 1, MarkPosition.INTRALINE, False),
    ]
    ok = (corrected_bracket == expected_corrected
          and strict_bracket == expected_strict
          and len(corrected_dots) == 5
          and all(m.suppressed_as_ellipsis for m in corrected_dots)
          and len(strict_dots) == 5
          and not any(m.suppressed_as_ellipsis for m in strict_dots))
    verdict(capsys, 3, ok,
            "close-bracket Final + 5/5 ellipsis dots suppressed when "
            "corrected; Intraline + 0/5 suppressed in strict mode")
    assert corrected_bracket == expected_corrected
    assert strict_bracket == expected_strict
    assert len(corrected_dots) == 5
    assert all(m.glyph == "." and m.suppressed_as_ellipsis
               for m in corrected_dots)
    assert len(strict_dots) == 5
    assert not any(m.suppressed_as_ellipsis for m in strict_dots)
    assert all(m.position is MarkPosition.INTRALINE for m in strict_dots)


# ---------------------------------------------------------------- 4 ---------

def _full_line_gof_p(poem, split):
    before = pattern_counts(poem, Granularity.FULL_LINE, 1, split)
    after = pattern_counts(poem, Granularity.FULL_LINE, split + 1,
                           poem.line_count)
    return chi2_gof(after.counts, before.counts).p_value


def test_criterion_4_split_test_calibration(capsys):
    """Full-line GOF at split 2300: 1-10% false positives on unchanged
    i.i.d. corpora; >= 80% power against a total-variation 0.15 change.

    2450-line corpora leave a 150-line section after the split, small enough
    relative to the reference that treating the reference proportions as
    fixed does not inflate the false-positive rate beyond the band.  The
    injected change moves 0.15 of a-half mass (A -> E), giving joint
    total-variation exactly 0.15 since the b-half is untouched.
    """
    t0 = time.perf_counter()
    changed = [0.15, 0.25, 0.2, 0.15, 0.25]

    null_hits = sum(
        _full_line_gof_p(
            split_change_scansion_poem(f"n{r}", 2450, 2300, SKEW_PROBS,
                                       seed=1000 + r), 2300) < 0.05
        for r in range(200))
    power_hits = sum(
        _full_line_gof_p(
            split_change_scansion_poem(f"a{r}", 2450, 2300, SKEW_PROBS,
                                       probs_after_a=changed,
                                       seed=7000 + r), 2300) < 0.05
        for r in range(200))
    elapsed = time.perf_counter() - t0

    fp = null_hits / 200
    power = power_hits / 200
    ok = 0.01 <= fp <= 0.10 and power >= 0.80 and elapsed < 120.0
    verdict(capsys, 4, ok,
            f"false-positive fraction {fp:.3f} (band 0.01-0.10), "
            f"power {power:.3f} (need >= 0.80), {elapsed:.1f}s")
    assert 0.01 <= fp <= 0.10
    assert power >= 0.80
    assert elapsed < 120.0


# ---------------------------------------------------------------- 5 ---------

def test_criterion_5_incidence_correlation_insensitivity(capsys):
    """A pattern whose density drifts 30% -> 10% still produces a cumulative
    incidence correlation above 0.99, while the distribution tests reject."""
    poem = drift_scansion_poem("drift", 3000)
    fit = cumulative_incidence_r(poem, "A", Granularity.HALF_LINE)
    gof_p = _full_line_gof_p(poem, 2300)

    ok = fit.r > 0.99 and gof_p < 0.01
    verdict(capsys, 5, ok,
            f"cumulative incidence r {fit.r:.5f} (> 0.99) while full-line "
            f"GOF p {gof_p:.2e} (< 0.01)")
    assert fit.r > 0.99
    assert gof_p < 0.01


# ---------------------------------------------------------------- 6 ---------

def test_criterion_6_clustering_oracle_and_recovery(capsys):
    """Complete linkage matches a brute-force oracle exactly on 50 random
    20-point matrices; the two-style corpus is recovered with purity >= 0.95
    and a boundary within 100 lines; profile/distance invariants hold."""
    mismatches = 0
    for seed in range(50):
        dist = random_distance_matrix(20, seed)
        tree = agglomerative_complete(dist)
        oracle = brute_force_complete(dist)
        if tree.merges != oracle.merges:
            mismatches += 1
        heights = [h for _, _, h in tree.merges]
        assert heights == sorted(heights)
        assert len(tree.merges) == 19

    corpus = two_style_corpus()
    poem = corpus.poem("twins")
    windows = rolling_windows(poem, 300, 100)
    profiles = build_profiles(corpus, windows, 3, 200)
    for profile in profiles:
        values = np.array(profile.values)
        assert values.min() >= 0.0 and values.sum() <= 1.0 + 1e-12
    dist = cosine_distance_matrix(profiles)
    assert np.array_equal(dist.values, dist.values.T)
    assert np.all(np.diag(dist.values) == 0.0)
    assert dist.values.min() >= 0.0 and dist.values.max() <= 1.0

    # tripling a window's text leaves its relative frequencies unchanged
    base = " ".join(f"{ln.a_text} {ln.b_text}" for ln in poem.lines[:5])
    scale_corpus = build_corpus(*[
        build_poem(f"s{i}", 1, text_fn=lambda _, t=t: (t, ""))
        for i, t in enumerate([base, " ".join([base] * 3)])
    ])
    scale_windows = [
        SampleWindow(source=p.id, first_line=1, last_line=1,
                     composition={p.id: 1})
        for p in scale_corpus.poems
    ]
    short, tripled = build_profiles(scale_corpus, scale_windows, 2, 100)
    assert short.features == tripled.features
    assert short.values == tripled.values

    assignment = top_two_assignment(agglomerative_complete(dist))
    truth = {window_id(w): majority_part(w) for w in windows}
    purity, ari = clustering_quality(assignment, truth)
    boundary = split_boundary_estimate(windows, assignment)

    ok = mismatches == 0 and purity >= 0.95 and abs(boundary - 1200) <= 100
    verdict(capsys, 6, ok,
            f"50/50 oracle-exact merge lists, purity {purity:.3f}, "
            f"ARI {ari:.3f}, boundary {boundary:.0f} (truth 1200)")
    assert mismatches == 0
    assert purity >= 0.95
    assert abs(boundary - 1200) <= 100


# ---------------------------------------------------------------- 7 ---------

def test_criterion_7_shared_compound_null_calibration(capsys):
    """Corpora drawn from the reallocation null itself score with z-means
    near 0 and z-sd near 1: |mean| < 0.05, sd in [0.9, 1.1] at a fixed seed
    set of 1000 generated corpora (45 poem pairs each).

    The null weights are re-fitted from each scored corpus, which absorbs a
    little of the corpus's own fluctuation; the hapax-heavy type inventory
    keeps that shrinkage small enough to stay inside the band.
    """
    multiplicities = [1] * 180 + [2] * 100 + [3] * 20
    weights = [0.1] * 10
    zs = []
    t0 = time.perf_counter()
    for rep in range(1000):
        corpus = null_allocated_compound_corpus(multiplicities, weights,
                                                seed=101, stream=rep)
        scores = shared_compound_scores(corpus, N=1000,
                                        rng=RngStream(202, rep))
        zs.extend(score.z for score in scores)
    elapsed = time.perf_counter() - t0

    zs = np.array(zs)
    mean = float(zs.mean())
    sd = float(zs.std(ddof=1))
    ok = abs(mean) < 0.05 and 0.9 <= sd <= 1.1
    verdict(capsys, 7, ok,
            f"z mean {mean:+.4f} (|.| < 0.05), sd {sd:.4f} (in [0.9, 1.1]) "
            f"over {zs.size} pair scores, {elapsed:.0f}s")
    assert abs(mean) < 0.05
    assert 0.9 <= sd <= 1.1


# ---------------------------------------------------------------- 8 ---------

WORD_POOLS = {
    "epic-a": "hwstgearmdnilofu",
    "epic-b": "hwstgearmdnilobc",
    "saga": "xzyquckfjvpwtrgh",
}


def fixture_poem(poem_id, n, seed, scanned, parts=None):
    """Deterministic poem with punctuation, compounds, and optional scansion."""
    gen = RngStream(seed, 5).generator()
    pool = WORD_POOLS[poem_id]
    a_labels = gen.choice(5, size=n, p=SKEW_PROBS) if scanned else None
    b_labels = gen.choice(5, size=n, p=SKEW_PROBS) if scanned else None
    lines = []
    for i in range(1, n + 1):
        words = []
        for _ in range(6):
            length = int(gen.integers(3, 8))
            start = int(gen.integers(0, len(pool) - length))
            words.append(pool[start:start + length])
        a = " ".join(words[:3])
        b = " ".join(words[3:])
        if gen.random() < 0.3:
            a += ","
        if gen.random() < 0.15:
            a += ";"
        if gen.random() < 0.8:
            b += "."
        compounds = []
        if i % 11 == 0:
            compounds.append(f"{poem_id}hapax{i}")
        if i % 250 == 0:
            compounds.append("sharedlemma")
        lines.append(VerseLine(
            index=i, a_text=a, b_text=b,
            a_pattern=HALF_LABELS[a_labels[i - 1]] if scanned else None,
            b_pattern=HALF_LABELS[b_labels[i - 1]] if scanned else None,
            compounds=tuple(compounds)))
    if parts is None:
        parts = (PartRange(poem_id, 1, n),)
    return Poem(id=poem_id, lines=tuple(lines), parts=parts)


def test_criterion_8_deterministic_report(capsys, tmp_path):
    """`report --seed 7` on a 10000-line corpus: two runs produce
    byte-identical output trees (SVG included) and one run takes < 60 s."""
    corpus_dir = tmp_path / "corpus"
    write_corpus(build_corpus(
        fixture_poem("epic-a", 4000, 11, True,
                     parts=(PartRange("A", 1, 2000),
                            PartRange("B", 2001, 4000))),
        fixture_poem("epic-b", 3500, 12, True),
        fixture_poem("saga", 2500, 13, False),
    ), corpus_dir)

    trees = []
    elapsed = None
    for name in ("first", "second"):
        out = tmp_path / name
        t0 = time.perf_counter()
        code = dispatch(["report", "--corpus", str(corpus_dir),
                         "--seed", "7", "--out", str(out)])
        elapsed = elapsed if elapsed is not None else time.perf_counter() - t0
        assert code == 0
        trees.append({
            str(p.relative_to(out)): p.read_bytes()
            for p in sorted(out.rglob("*")) if p.is_file()
        })

    identical = trees[0] == trees[1]
    svg_count = sum(1 for name in trees[0] if name.endswith(".svg"))
    ok = identical and elapsed < 60.0 and svg_count > 0
    verdict(capsys, 8, ok,
            f"{len(trees[0])} files ({svg_count} SVG) byte-identical across "
            f"runs: {identical}; first run {elapsed:.1f}s (< 60 s)")
    assert identical
    assert svg_count > 0
    assert elapsed < 60.0


# ---------------------------------------------------------------- 9 ---------

DATASET = pathlib.Path(os.environ.get(
    "VERSEMETRY_DATASET",
    pathlib.Path(__file__).parent.parent / "dataset"))

# reference values recorded for the published corpus, tolerances per the
# reproduction contract
SPLIT_TEST_REFERENCE = {
    "half_homogeneity": 0.4649,
    "half_gof": 0.303,
    "full_homogeneity": 0.121,
    "full_gof": 0.0112,
}
GENESIS_SYLLABLES = {"A": 9.72, "B": 12.07}
EXODUS_THIRDS_SLOPES = (6.36, 11.38, 6.17)
ELENE_HALVES_SLOPES = (31.25, 22.67)
MERGED_ELENE_GENB_PHOENIX_SLOPE = 28.05
MERGED_GENA_ANDREAS_SLOPE = 23.88


def _resolve_part_lines(corpus, poem_id, part):
    """Lines of a poem part, accepting either `<poem>` with a named part or a
    standalone `<poem>-<part>` poem."""
    standalone = f"{poem_id}-{part.lower()}"
    ids = {p.id for p in corpus.poems}
    if standalone in ids:
        return list(corpus.poem(standalone).lines)
    poem = corpus.poem(poem_id)
    wanted = [r for r in poem.parts if r.name.upper() == part.upper()]
    if not wanted:
        raise AssertionError(f"poem {poem_id} has no part named {part}")
    return [poem.line(i) for r in wanted for i in range(r.first, r.last + 1)]


def _part_units(corpus, poem_id, part):
    standalone = f"{poem_id}-{part.lower()}"
    ids = {p.id for p in corpus.poems}
    if standalone in ids:
        return [(corpus.poem(standalone), None, None)]
    poem = corpus.poem(poem_id)
    wanted = [r for r in poem.parts if r.name.upper() == part.upper()]
    if not wanted:
        raise AssertionError(f"poem {poem_id} has no part named {part}")
    return [(poem, r.first, r.last) for r in wanted]


def _slope_per100(fit):
    return fit.slope * 100.0


def test_criterion_9_published_dataset(capsys):
    """Reproductions on the converted published corpus: split-test p-values
    within +-0.02, the two Genesis sections' syllable means within +-0.3,
    and the published hapax regression slopes within +-5% per 100 lines.

    Expected poem ids: beowulf, genesis (parts A/B, or genesis-a/genesis-b),
    exodus, elene, phoenix, andreas.
    """
    if not (DATASET / "corpus.json").is_file():
        with capsys.disabled():
            print(f"\nCRITERION 9: SKIP - no converted corpus at {DATASET} "
                  "(set VERSEMETRY_DATASET to enable)")
        pytest.skip("converted published corpus not present")
    corpus = parse_corpus(DATASET)
    checks = []

    table = split_distribution_tests(corpus.poem("beowulf"), 2300,
                                     B=20000, rng=RngStream(40))
    got_p = {
        "half_homogeneity": table.half_homogeneity.p_value,
        "half_gof": table.half_gof.p_value,
        "full_homogeneity": table.full_homogeneity.p_value,
        "full_gof": table.full_gof.p_value,
    }
    for key, want in SPLIT_TEST_REFERENCE.items():
        checks.append((f"{key} {got_p[key]:.4f} vs {want}",
                       abs(got_p[key] - want) <= 0.02))

    for part, want in GENESIS_SYLLABLES.items():
        got = mean_syllables_per_line(_resolve_part_lines(corpus, "genesis",
                                                          part))
        checks.append((f"genesis {part} syllables {got:.2f} vs {want}",
                       abs(got - want) <= 0.3))

    hapax = build_compound_index(corpus).hapax_set

    def rel_ok(got, want):
        return abs(got - want) <= 0.05 * want

    exodus = corpus.poem("exodus")
    third = exodus.line_count // 3
    exodus_units = [(exodus, 1, third), (exodus, third + 1, 2 * third),
                    (exodus, 2 * third + 1, exodus.line_count)]
    fits, _ = segment_fits(exodus_units, SegmentMode.PARTITION, hapax)
    for fit, want in zip(fits, EXODUS_THIRDS_SLOPES):
        checks.append((f"exodus third slope {_slope_per100(fit):.2f} "
                       f"vs {want}", rel_ok(_slope_per100(fit), want)))

    elene = corpus.poem("elene")
    half = elene.line_count // 2
    fits, _ = segment_fits([(elene, 1, half),
                            (elene, half + 1, elene.line_count)],
                           SegmentMode.PARTITION, hapax)
    for fit, want in zip(fits, ELENE_HALVES_SLOPES):
        checks.append((f"elene half slope {_slope_per100(fit):.2f} vs {want}",
                       rel_ok(_slope_per100(fit), want)))

    merged_units = ([(elene, None, None)]
                    + _part_units(corpus, "genesis", "B")
                    + [(corpus.poem("phoenix"), None, None)])
    _, combined = segment_fits(merged_units, SegmentMode.MERGE, hapax)
    checks.append((f"merged elene+genesisB+phoenix slope "
                   f"{_slope_per100(combined):.2f} vs "
                   f"{MERGED_ELENE_GENB_PHOENIX_SLOPE}",
                   rel_ok(_slope_per100(combined),
                          MERGED_ELENE_GENB_PHOENIX_SLOPE)))

    merged_units = (_part_units(corpus, "genesis", "A")
                    + [(corpus.poem("andreas"), None, None)])
    _, combined = segment_fits(merged_units, SegmentMode.MERGE, hapax)
    checks.append((f"merged genesisA+andreas slope "
                   f"{_slope_per100(combined):.2f} vs "
                   f"{MERGED_GENA_ANDREAS_SLOPE}",
                   rel_ok(_slope_per100(combined), MERGED_GENA_ANDREAS_SLOPE)))

    failures = [desc for desc, passed in checks if not passed]
    verdict(capsys, 9, not failures,
            f"{len(checks) - len(failures)}/{len(checks)} reproduction "
            "checks within tolerance"
            + ("" if not failures else "; failed: " + "; ".join(failures)))
    assert not failures, "\n".join(failures)
