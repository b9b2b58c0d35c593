"""Builders for synthetic poems and on-disk corpora used across test modules."""

import json

import numpy as np

from versemetry.corpus import Corpus, PartRange, Poem, VerseLine
from versemetry.metre import HALF_LABELS
from versemetry.ngramcluster import Dendrogram, DistanceMatrix
from versemetry.stats import RngStream


def build_poem(poem_id="p", n=10, parts=None, pattern_fn=None, text_fn=None,
               compounds=None):
    """Construct a Poem in memory.

    ``pattern_fn(index) -> (a, b)`` supplies scansion labels, ``text_fn(index)
    -> (a_text, b_text)`` the half-line texts, ``compounds`` a mapping of line
    index to lemma tuple.
    """
    compounds = compounds or {}
    lines = []
    for i in range(1, n + 1):
        a_text, b_text = text_fn(i) if text_fn else (f"a verse {i}", f"b verse {i}")
        a_pat, b_pat = pattern_fn(i) if pattern_fn else (None, None)
        lines.append(VerseLine(
            index=i, a_text=a_text, b_text=b_text,
            a_pattern=a_pat, b_pattern=b_pat,
            compounds=tuple(compounds.get(i, ())),
        ))
    if parts is None:
        parts = (PartRange(poem_id, 1, n),)
    return Poem(id=poem_id, lines=tuple(lines), parts=tuple(parts))


def build_corpus(*poems):
    return Corpus(poems=tuple(poems))


def write_manifest(root, poem_entries):
    (root / "corpus.json").write_text(
        json.dumps({"poems": poem_entries}), encoding="utf-8")


def iid_scansion_poem(poem_id, n, probs, seed=0, stream=0, probs_b=None):
    """Poem whose half-line labels are i.i.d. draws over HALF_LABELS.

    ``probs`` drives the a-half; the b-half uses ``probs_b`` (defaults to the
    same distribution), drawn independently.
    """
    gen = RngStream(seed, stream).generator()
    a = gen.choice(len(HALF_LABELS), size=n, p=probs)
    b = gen.choice(len(HALF_LABELS), size=n, p=probs_b if probs_b is not None else probs)
    return build_poem(
        poem_id, n,
        pattern_fn=lambda i: (HALF_LABELS[a[i - 1]], HALF_LABELS[b[i - 1]]),
    )


def drift_scansion_poem(poem_id, n, start=0.30, end=0.10):
    """Poem where the density of half-line label "A" drifts linearly.

    Occurrences of "A" are placed deterministically at the quantiles of the
    drifting density (no sampling noise); the remaining half-lines cycle
    through B-E so non-A mass also shifts smoothly.
    """
    units = 2 * n
    midpoints = (np.arange(units) + 0.5) / units
    density = start - (start - end) * midpoints
    cumulative = np.cumsum(density)
    hits = set(np.searchsorted(cumulative, np.arange(1, int(cumulative[-1]) + 1)))
    labels = [
        "A" if u in hits else HALF_LABELS[1 + u % 4]
        for u in range(units)
    ]
    return build_poem(
        poem_id, n,
        pattern_fn=lambda i: (labels[2 * (i - 1)], labels[2 * (i - 1) + 1]),
    )


def pool_text_poem(poem_id, n, pool_fn, seed=0, words_per_half=3, parts=None):
    """Poem whose line texts are random words over per-line letter pools.

    ``pool_fn(index) -> str`` picks the alphabet for each line, so disjoint
    pools produce windows with (nearly) disjoint n-gram inventories while the
    seeded generator keeps lines from repeating verbatim.
    """
    gen = RngStream(seed, 77).generator()

    def half(pool):
        words = []
        for _ in range(words_per_half):
            length = int(gen.integers(3, 8))
            words.append("".join(
                pool[int(i)] for i in gen.integers(0, len(pool), size=length)))
        return " ".join(words)

    texts = {}
    for i in range(1, n + 1):
        pool = pool_fn(i)
        texts[i] = (half(pool), half(pool))
    return build_poem(poem_id, n, parts=parts, text_fn=lambda i: texts[i])


def null_allocated_compound_corpus(multiplicities, weights, seed, stream=0):
    """Corpus whose compound annotations are drawn from the reallocation null.

    Each type's occurrences are assigned to poems by one multinomial draw
    with the given poem weights; tokens land on line 1 (line placement does
    not affect shared-compound scoring).  Poem ids are p0, p1, ...
    """
    gen = RngStream(seed, stream).generator()
    per_poem = [[] for _ in weights]
    for t, m in enumerate(multiplicities):
        counts = gen.multinomial(m, weights)
        for p, c in enumerate(counts):
            per_poem[p].extend([f"c{t:04d}"] * c)
    poems = [
        build_poem(f"p{p}", 2, compounds={1: tuple(lemmas)})
        for p, lemmas in enumerate(per_poem)
    ]
    return build_corpus(*poems)


def write_simple_poem_files(root, poem_id, text_lines, scansion_rows=None,
                            compound_rows=None, parts=None):
    """Write one poem's files by hand and return its manifest entry.

    ``text_lines`` are raw file lines (already TAB-joined), ``scansion_rows``
    and ``compound_rows`` raw TSV body rows without headers.
    """
    text_name = f"{poem_id}.txt"
    (root / text_name).write_text("\n".join(text_lines) + "\n", encoding="utf-8")
    entry = {"id": poem_id, "text": text_name, "scansion": None,
             "compounds": None, "parts": parts}
    if scansion_rows is not None:
        name = f"{poem_id}.scansion.tsv"
        (root / name).write_text("\n".join(scansion_rows) + "\n", encoding="utf-8")
        entry["scansion"] = name
    if compound_rows is not None:
        name = f"{poem_id}.compounds.tsv"
        (root / name).write_text("\n".join(compound_rows) + "\n", encoding="utf-8")
        entry["compounds"] = name
    return entry


def split_change_scansion_poem(poem_id, n, split, probs, probs_after_a=None,
                               seed=0, stream=0):
    """Scanned poem that is i.i.d. over HALF_LABELS, with an optional change
    in the a-half distribution after ``split``; the b-half keeps ``probs``
    throughout, so the total-variation distance of the full-line distribution
    equals that of the a-half marginals."""
    gen = RngStream(seed, stream).generator()
    after = probs_after_a if probs_after_a is not None else probs
    a = np.concatenate([gen.choice(len(HALF_LABELS), size=split, p=probs),
                        gen.choice(len(HALF_LABELS), size=n - split, p=after)])
    b = gen.choice(len(HALF_LABELS), size=n, p=probs)
    return build_poem(
        poem_id, n,
        pattern_fn=lambda i: (HALF_LABELS[a[i - 1]], HALF_LABELS[b[i - 1]]),
    )


def two_style_corpus(n=2200, switch=1200, seed=5):
    """Single poem whose character inventory switches mid-text; parts record
    the true style regions."""
    poem = pool_text_poem(
        "twins", n,
        pool_fn=lambda i: "aebimor" if i <= switch else "xzyquck",
        seed=seed,
        parts=(PartRange("A", 1, switch), PartRange("B", switch + 1, n)),
    )
    return build_corpus(poem)


def brute_force_complete(dist):
    """Naive complete linkage straight from the definition: the distance
    between clusters is the max over original leaf pairs."""
    n = len(dist.labels)
    clusters = {i: frozenset([i]) for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        for a in sorted(clusters):
            for b in sorted(clusters):
                if b <= a:
                    continue
                d = max(dist.values[i, j]
                        for i in clusters[a] for j in clusters[b])
                if best is None or (d, a, b) < best:
                    best = (d, a, b)
        d, a, b = best
        clusters[next_id] = clusters.pop(a) | clusters.pop(b)
        merges.append((a, b, float(d)))
        next_id += 1
    return Dendrogram(merges=tuple(merges), leaves=dist.labels)


def random_distance_matrix(n, seed):
    gen = RngStream(seed, 9).generator()
    raw = gen.random((n, n))
    values = (raw + raw.T) / 2
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(labels=tuple(f"s{i:02d}" for i in range(n)),
                          values=values)
