"""Turn a gold clustering into the canonical per-sentence action sequences."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .document import Clustering, Document, Span, mention_order, order_key
from .transitions import (
    Action,
    AddMention,
    Append,
    Link,
    Shift,
    State,
    SystemKind,
    apply,
    link_case,
)


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleStep:
    sentence: int
    actions: tuple[Action, ...]
    state_before: State


class _GoldIndex:
    """Per-mention view of a gold clustering, in document order."""

    def __init__(self, doc: Document, gold: Clustering):
        self.doc = doc
        self.sentence: dict[Span, int] = {}
        for cluster in gold:
            for m in cluster:
                i = doc.sentence_of_span(m)
                if i is None:
                    raise OracleError(f"{doc.doc_key}: gold mention {m} crosses a sentence or the document bounds")
                self.sentence[m] = i
        # members of each gold cluster sorted into document order
        self.chain: dict[Span, list[Span]] = {}
        for cluster in gold:
            ordered = mention_order(cluster)
            for m in ordered:
                self.chain[m] = ordered
        self.by_sentence: dict[int, list[Span]] = {}
        for m, i in self.sentence.items():
            self.by_sentence.setdefault(i, []).append(m)
        for ms in self.by_sentence.values():
            ms.sort(key=order_key)

    def earlier(self, m: Span) -> list[Span]:
        chain = self.chain[m]
        return chain[: chain.index(m)]


def _actions_for_sentence(system: SystemKind, state: State, index: _GoldIndex) -> list[Action]:
    i = state.focus
    actions: list[Action] = []
    live = state
    for m in index.by_sentence.get(i, ()):
        earlier = index.earlier(m)
        step: Optional[Action] = None
        if not earlier:
            if system is SystemKind.MENTION_LINK_APPEND:
                step = AddMention(m)
        else:
            prior = [e for e in earlier if index.sentence[e] < i]
            if system is not SystemKind.LINK_ONLY and len(prior) >= 2:
                k = live.clustering.cluster_of(prior[0])
                if k is None:
                    raise OracleError(
                        f"{state.doc.doc_key}: sentence {i}: earlier mention {prior[0]} is not clustered in the state"
                    )
                step = Append(m, k)
            else:
                step = Link(m, earlier[-1])
        if step is not None:
            actions.append(step)
            live = apply(live, step, system)
    actions.append(Shift())
    return actions


def oracle_actions(system: SystemKind, state: State, gold: Clustering) -> list[Action]:
    """Oracle action sequence for the focus sentence of ``state``."""
    if state.is_final:
        raise OracleError("no oracle actions for a final state")
    return _actions_for_sentence(system, state, _GoldIndex(state.doc, gold))


def oracle_run(system: SystemKind, doc: Document, gold: Clustering) -> list[OracleStep]:
    index = _GoldIndex(doc, gold)
    state = State.initial(doc)
    steps = []
    while not state.is_final:
        actions = _actions_for_sentence(system, state, index)
        steps.append(OracleStep(state.focus, tuple(actions), state))
        for action in actions:
            state = apply(state, action, system)
    return steps


def expected_final(system: SystemKind, gold: Clustering) -> Clustering:
    """What replaying the oracle must reconstruct for ``system``."""
    return gold if system.keeps_singletons else gold.without_singletons()


def replay(system: SystemKind, doc: Document, steps: list[OracleStep]) -> State:
    state = State.initial(doc)
    for step in steps:
        for action in step.actions:
            state = apply(state, action, system)
    return state


def link_case_counts(system: SystemKind, doc: Document, steps: list[OracleStep]) -> Counter:
    """Tally the link merge cases hit while replaying ``steps``."""
    counts: Counter = Counter()
    state = State.initial(doc)
    for step in steps:
        for action in step.actions:
            if isinstance(action, Link):
                counts[link_case(state.clustering, action.source, action.target)] += 1
            state = apply(state, action, system)
    return counts
