"""Metric checks against hand-derived values and naive reimplementations."""

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from seqcoref.document import Clustering, Span
from seqcoref.metrics import (
    SingletonMode,
    Singletons,
    b_cubed,
    ceaf_phi4,
    conll_score,
    corpus_score,
    muc,
)

a, b, c, d, e, x = (Span(n, n) for n in range(1, 7))

# each worked example: gold, pred, (MUC P, R), (B3 P, R), (CEAF P, R)
WORKED = [
    (
        # {a b c} {d e} against {a b} {c d e}
        Clustering((frozenset({a, b, c}), frozenset({d, e}))),
        Clustering((frozenset({a, b}), frozenset({c, d, e}))),
        (Fraction(2, 3), Fraction(2, 3)),
        (Fraction(11, 15), Fraction(11, 15)),
        (Fraction(4, 5), Fraction(4, 5)),
    ),
    (
        # singleton gold cluster and an invented mention x
        Clustering((frozenset({a, b}), frozenset({c}))),
        Clustering((frozenset({a}), frozenset({b, c, x}))),
        (Fraction(0), Fraction(0)),
        (Fraction(5, 12), Fraction(2, 3)),
        (Fraction(7, 12), Fraction(7, 12)),
    ),
    (
        Clustering((frozenset({a, b, c, d}),)),
        Clustering((frozenset({a, b}), frozenset({c, d}))),
        (Fraction(1), Fraction(2, 3)),
        (Fraction(1), Fraction(1, 2)),
        (Fraction(1, 3), Fraction(2, 3)),
    ),
]


def f1(p, r):
    return 2 * p * r / (p + r) if p + r else 0


@pytest.mark.parametrize("gold, pred, m, b3, ceaf", WORKED)
def test_worked_examples(gold, pred, m, b3, ceaf):
    for got, (p, r) in ((muc(gold, pred), m), (b_cubed(gold, pred), b3), (ceaf_phi4(gold, pred), ceaf)):
        assert got.precision == pytest.approx(float(p), abs=1e-9)
        assert got.recall == pytest.approx(float(r), abs=1e-9)
        assert got.f1 == pytest.approx(float(f1(p, r)), abs=1e-9)


def test_worked_average():
    gold, pred = WORKED[0][:2]
    assert conll_score(gold, pred).avg_f1 == pytest.approx(11 / 15, abs=1e-9)


# -- naive reference implementations ------------------------------------------


def naive_muc(keys, responses):
    """Recall side of MUC by counting the links the response keeps."""
    num = den = 0
    for k in keys:
        parts = []
        for m in k:
            owner = next((i for i, r in enumerate(responses) if m in r), None)
            parts.append(owner if owner is not None else ("alone", m))
        num += len(k) - len(set(parts))
        den += len(k) - 1
    return num, den


def naive_b3(keys, responses):
    total = 0.0
    n = 0
    for k in keys:
        for m in k:
            r = next((r for r in responses if m in r), frozenset())
            total += len(k & r) / len(k)
            n += 1
    return total, n


def brute_ceaf(gold, pred):
    g, p = list(gold), list(pred)
    if len(g) > len(p):
        g, p = p, g
    best = 0.0
    for perm in itertools.permutations(range(len(p)), len(g)):
        best = max(best, sum(2 * len(g[i] & p[j]) / (len(g[i]) + len(p[j])) for i, j in enumerate(perm)))
    return best


def random_clustering(rng, mentions, max_clusters):
    chosen = [m for m in mentions if rng.random() < 0.8]
    rng.shuffle(chosen)
    groups: dict = {}
    for m in chosen:
        groups.setdefault(rng.randrange(max_clusters), set()).add(m)
    return Clustering(tuple(frozenset(v) for v in groups.values()))


def test_ceaf_matches_exhaustive_search():
    rng = random.Random(7)
    mentions = [Span(n, n) for n in range(1, 16)]
    for _ in range(1000):
        gold = random_clustering(rng, mentions, 6)
        pred = random_clustering(rng, mentions, 6)
        best = brute_ceaf(gold, pred)
        got = ceaf_phi4(gold, pred)
        if len(pred):
            assert got.precision == pytest.approx(best / len(pred), abs=1e-9)
        if len(gold):
            assert got.recall == pytest.approx(best / len(gold), abs=1e-9)


@st.composite
def clustering_pairs(draw):
    mentions = [Span(n, n) for n in range(1, 13)]
    rng = random.Random(draw(st.integers(0, 2**32)))
    return random_clustering(rng, mentions, 5), random_clustering(rng, mentions, 5)


@settings(max_examples=300, deadline=None)
@given(clustering_pairs())
def test_against_naive_definitions(pair):
    gold, pred = pair
    num, den = naive_muc(gold, pred)
    assert muc(gold, pred).recall == pytest.approx(num / den if den else 0.0, abs=1e-12)
    num, den = naive_b3(pred, gold)
    assert b_cubed(gold, pred).precision == pytest.approx(num / den if den else 0.0, abs=1e-12)


@settings(max_examples=1000, deadline=None)
@given(clustering_pairs())
def test_identity_and_swap(pair):
    gold, pred = pair
    if gold.without_singletons().clusters:
        assert muc(gold, gold).f1 == pytest.approx(1.0)
    if gold.clusters:
        assert b_cubed(gold, gold).f1 == pytest.approx(1.0)
        assert ceaf_phi4(gold, gold).f1 == pytest.approx(1.0)
    for metric in (muc, b_cubed, ceaf_phi4):
        fwd, back = metric(gold, pred), metric(pred, gold)
        assert fwd.precision == pytest.approx(back.recall, abs=1e-12)
        assert fwd.recall == pytest.approx(back.precision, abs=1e-12)


def test_corpus_score_is_micro_averaged():
    g1, p1 = WORKED[0][:2]
    g2, p2 = WORKED[2][:2]
    report = corpus_score([(g1, p1), (g2, p2)])
    # MUC: precision (2 + 2) / (3 + 2), recall (2 + 2) / (3 + 3)
    assert report.muc.precision == pytest.approx(4 / 5)
    assert report.muc.recall == pytest.approx(4 / 6)


def test_singleton_modes():
    gold = Clustering((frozenset({a, b}), frozenset({c})))
    pred = Clustering((frozenset({a, b}), frozenset({d})))
    yy = conll_score(gold, pred, SingletonMode.parse("YY"))
    nn = conll_score(gold, pred, SingletonMode.parse("NN"))
    ny = conll_score(gold, pred, SingletonMode.parse("NY"))
    yn = conll_score(gold, pred, SingletonMode.parse("YN"))
    assert nn.avg_f1 == pytest.approx(1.0)
    assert yy.b3.recall == pytest.approx(2 / 3)
    assert ny.b3.precision == pytest.approx(1.0) and ny.b3.recall == pytest.approx(2 / 3)
    assert yn.b3.recall == pytest.approx(1.0) and yn.b3.precision == pytest.approx(2 / 3)
    assert str(ny.mode) == "P=N E=Y"
    assert SingletonMode.parse("ny") == SingletonMode(Singletons.EXCLUDE, Singletons.INCLUDE)


def test_empty_clusterings_score_zero():
    empty = Clustering()
    assert conll_score(empty, empty).avg_f1 == 0.0
