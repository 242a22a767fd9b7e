import pytest
from hypothesis import given, settings

from seqcoref.document import Clustering, Document, Span
from seqcoref.oracle import OracleError, expected_final, link_case_counts, oracle_run, replay
from seqcoref.transitions import AddMention, Append, Link, Shift, SystemKind

from conftest import annotated_documents

SYSTEMS = list(SystemKind)


def test_restaurant_link_append_steps(restaurant):
    steps = oracle_run(SystemKind.LINK_APPEND, restaurant.document, restaurant.gold)
    assert [s.actions for s in steps] == [
        (Shift(),),
        (Link(Span(14, 14), Span(1, 1)), Shift()),
        (Append(Span(21, 21), 1), Link(Span(28, 29), Span(12, 13)), Link(Span(23, 29), Span(7, 13)), Shift()),
        (Shift(),),
    ]


def test_restaurant_link_only_links_to_most_recent(restaurant):
    steps = oracle_run(SystemKind.LINK_ONLY, restaurant.document, restaurant.gold)
    assert steps[2].actions[0] == Link(Span(21, 21), Span(14, 14))
    assert not any(isinstance(a, Append) for s in steps for a in s.actions)


def test_restaurant_mention_link_append(restaurant):
    steps = oracle_run(SystemKind.MENTION_LINK_APPEND, restaurant.document, restaurant.gold)
    # first mentions are introduced in mention order: I, your house, the restaurant
    assert steps[0].actions == (AddMention(Span(1, 1)), AddMention(Span(12, 13)), AddMention(Span(7, 13)), Shift())
    # with one prior member, the second "I" still links rather than appends
    assert steps[1].actions == (Link(Span(14, 14), Span(1, 1)), Shift())
    assert steps[2].actions == (
        Append(Span(21, 21), 1), Link(Span(28, 29), Span(12, 13)), Link(Span(23, 29), Span(7, 13)), Shift()
    )


def test_within_sentence_chain_links_backwards():
    doc = Document.from_sentences("d", [["Mary", "said", "she", "did", "her", "best"]])
    gold = Clustering.of([(1, 1), (3, 3), (5, 5)])
    (step,) = oracle_run(SystemKind.LINK_APPEND, doc, gold)
    assert step.actions == (Link(Span(3, 3), Span(1, 1)), Link(Span(5, 5), Span(3, 3)), Shift())


def test_singletons_dropped_except_mention_link_append():
    doc = Document.from_sentences("d", [["a", "b"], ["c"]])
    gold = Clustering.of([(1, 1)], [(2, 2), (3, 3)])
    la = oracle_run(SystemKind.LINK_APPEND, doc, gold)
    assert la[0].actions == (Shift(),)
    mla = oracle_run(SystemKind.MENTION_LINK_APPEND, doc, gold)
    assert mla[0].actions == (AddMention(Span(1, 1)), AddMention(Span(2, 2)), Shift())
    assert replay(SystemKind.MENTION_LINK_APPEND, doc, mla).clustering.as_partition() == gold.as_partition()


def test_gold_mention_across_sentences_rejected():
    doc = Document.from_sentences("d", [["a", "b"], ["c"]])
    with pytest.raises(OracleError):
        oracle_run(SystemKind.LINK_APPEND, doc, Clustering.of([(2, 3)]))


@pytest.mark.parametrize("system", SYSTEMS, ids=lambda s: s.value)
def test_mini_corpus_roundtrip(system, mini_corpus):
    for entry in mini_corpus:
        steps = oracle_run(system, entry.document, entry.gold)
        final = replay(system, entry.document, steps).clustering
        assert final.as_partition() == expected_final(system, entry.gold).as_partition(), entry.key


@settings(max_examples=200, deadline=None)
@given(annotated_documents())
def test_random_roundtrip_and_shape(entry):
    for system in SYSTEMS:
        steps = oracle_run(system, entry.document, entry.gold)
        assert [s.sentence for s in steps] == list(range(1, entry.document.num_sentences + 1))
        for step in steps:
            assert step.actions[-1] == Shift()
            assert Shift() not in step.actions[:-1]
            for a in step.actions[:-1]:
                assert type(a) in system.action_kinds
                assert step.state_before.in_focus(a.source)
        final = replay(system, entry.document, steps).clustering
        assert final.as_partition() == expected_final(system, entry.gold).as_partition()
        # the oracle is a function of its inputs
        assert oracle_run(system, entry.document, entry.gold) == steps


@settings(max_examples=150, deadline=None)
@given(annotated_documents())
def test_link_append_appends_exactly_with_two_prior_members(entry):
    steps = oracle_run(SystemKind.LINK_APPEND, entry.document, entry.gold)
    doc = entry.document
    for step in steps:
        i = step.sentence
        for a in step.actions[:-1]:
            cluster = next(c for c in entry.gold if a.source in c)
            prior = [m for m in cluster if doc.sentence_of_span(m) < i]
            if isinstance(a, Append):
                assert len(prior) >= 2
                assert step.state_before.clustering.cluster(a.cluster) >= set(prior)
            else:
                assert len(prior) < 2
                assert a.target in cluster


def test_link_case_counts_restaurant(restaurant):
    steps = oracle_run(SystemKind.LINK_APPEND, restaurant.document, restaurant.gold)
    assert link_case_counts(SystemKind.LINK_APPEND, restaurant.document, steps) == {1: 3}
    steps = oracle_run(SystemKind.LINK_ONLY, restaurant.document, restaurant.gold)
    # "You" links to the second "I", which is already clustered
    assert link_case_counts(SystemKind.LINK_ONLY, restaurant.document, steps) == {1: 3, 2: 1}
