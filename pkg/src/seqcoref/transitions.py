"""The sentence-at-a-time transition systems.

A state is a focus sentence index plus the clustering built so far.  Four
action classes act on it: ``Link`` joins a focus-sentence mention to another
mention, ``Append`` adds a focus-sentence mention to a numbered cluster,
``AddMention`` opens a singleton cluster and ``Shift`` moves to the next
sentence.  Which classes are available depends on the :class:`SystemKind`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .document import Clustering, Document, Span


class TransitionError(ValueError):
    """An action cannot be applied to a state."""


@dataclass(frozen=True)
class Link:
    source: Span
    target: Span


@dataclass(frozen=True)
class Append:
    source: Span
    cluster: int


@dataclass(frozen=True)
class AddMention:
    source: Span


@dataclass(frozen=True)
class Shift:
    pass


Action = Union[Link, Append, AddMention, Shift]


class SystemKind(str, enum.Enum):
    LINK_APPEND = "link-append"
    LINK_ONLY = "link-only"
    MENTION_LINK_APPEND = "mention-link-append"

    @property
    def action_kinds(self) -> frozenset[type]:
        return _ACTION_KINDS[self]

    @property
    def keeps_singletons(self) -> bool:
        return self is SystemKind.MENTION_LINK_APPEND


_ACTION_KINDS = {
    SystemKind.LINK_ONLY: frozenset({Link, Shift}),
    SystemKind.LINK_APPEND: frozenset({Link, Append, Shift}),
    SystemKind.MENTION_LINK_APPEND: frozenset({Link, Append, AddMention, Shift}),
}


@dataclass(frozen=True)
class State:
    doc: Document = field(repr=False)
    focus: int = 1
    clustering: Clustering = Clustering()

    @classmethod
    def initial(cls, doc: Document, clustering: Optional[Clustering] = None) -> "State":
        return cls(doc, 1, clustering or Clustering())

    @property
    def is_final(self) -> bool:
        return self.focus == self.doc.num_sentences + 1

    def in_focus(self, m: Span) -> bool:
        """Whether ``m`` lies inside the focus sentence."""
        if self.is_final:
            return False
        first, last = self.doc.sentence_bounds(self.focus)
        return first <= m.start <= m.end <= last

    def in_prefix(self, m: Span) -> bool:
        """Whether ``m`` lies inside one sentence among 1..focus."""
        if self.is_final:
            return False
        i = self.doc.sentence_of_span(m)
        return i is not None and i <= self.focus


def _violation(state: State, action: Action) -> Optional[str]:
    if state.is_final:
        return "state is final"
    if isinstance(action, Shift):
        return None
    if not state.in_focus(action.source):
        return f"source {action.source} is not in focus sentence {state.focus}"
    if isinstance(action, Link):
        if not state.in_prefix(action.target):
            return f"target {action.target} is not in sentences 1..{state.focus}"
        if action.source == action.target:
            return "self-link"
    elif isinstance(action, Append):
        if not 1 <= action.cluster <= len(state.clustering):
            return f"cluster {action.cluster} out of range 1..{len(state.clustering)}"
    return None


def is_allowed(system: SystemKind, state: State, action: Action) -> bool:
    if type(action) not in system.action_kinds:
        return False
    return _violation(state, action) is None


def link_case(k: Clustering, source: Span, target: Span) -> int:
    """Which of the five merge cases adding ``source -> target`` falls into.

    1: neither clustered, 2: only the target clustered, 3: only the source
    clustered, 4: both clustered in different clusters, 5: same cluster.
    """
    ks, kt = k.cluster_of(source), k.cluster_of(target)
    if ks is None and kt is None:
        return 1
    if ks is None:
        return 2
    if kt is None:
        return 3
    return 4 if ks != kt else 5


def add_link(k: Clustering, source: Span, target: Span) -> Clustering:
    ks, kt = k.cluster_of(source), k.cluster_of(target)
    if ks is None and kt is None:
        return k.append(frozenset({source, target}))
    if ks is None:
        return k.replace(kt, k.cluster(kt) | {source})
    if kt is None:
        return k.replace(ks, k.cluster(ks) | {target})
    if ks == kt:
        return k
    return _merge(k, ks, kt)


def _merge(k: Clustering, a: int, b: int) -> Clustering:
    # the older (lower-numbered) cluster survives
    lo, hi = min(a, b), max(a, b)
    merged = k.cluster(lo) | k.cluster(hi)
    clusters = list(k.clusters)
    clusters[lo - 1] = merged
    del clusters[hi - 1]
    return Clustering(tuple(clusters))


def add_to_cluster(k: Clustering, source: Span, cluster: int) -> Clustering:
    current = k.cluster_of(source)
    if current is None:
        return k.replace(cluster, k.cluster(cluster) | {source})
    if current == cluster:
        return k
    # source already sits in another cluster: keep clusters disjoint
    return _merge(k, current, cluster)


def add_mention(k: Clustering, source: Span) -> Clustering:
    if k.cluster_of(source) is not None:
        return k
    return k.append(frozenset({source}))


def apply(state: State, action: Action, system: Optional[SystemKind] = None) -> State:
    """Apply one action and return the successor state.

    With ``system`` given, actions outside that system's action set are
    rejected as well.
    """
    if system is not None and type(action) not in system.action_kinds:
        raise TransitionError(f"{type(action).__name__} is not an action of {system.value}")
    problem = _violation(state, action)
    if problem is not None:
        raise TransitionError(f"cannot apply {action}: {problem}")
    k = state.clustering
    if isinstance(action, Shift):
        return State(state.doc, state.focus + 1, k)
    if isinstance(action, Link):
        k = add_link(k, action.source, action.target)
    elif isinstance(action, Append):
        k = add_to_cluster(k, action.source, action.cluster)
    elif isinstance(action, AddMention):
        k = add_mention(k, action.source)
    else:
        raise TransitionError(f"unknown action {action!r}")
    return State(state.doc, state.focus, k)


def apply_all(state: State, actions: Iterable[Action], system: Optional[SystemKind] = None) -> State:
    for action in actions:
        state = apply(state, action, system)
    return state


def run_episode(
    system: SystemKind, doc: Document, action_stream: Sequence[Sequence[Action]]
) -> State:
    """Fold per-sentence action lists over the initial state of ``doc``."""
    if len(action_stream) != doc.num_sentences:
        raise TransitionError(
            f"{doc.doc_key}: {len(action_stream)} action lists for {doc.num_sentences} sentences"
        )
    state = State.initial(doc)
    for i, actions in enumerate(action_stream, start=1):
        if not actions or not isinstance(actions[-1], Shift):
            raise TransitionError(f"{doc.doc_key}: sentence {i}: action list does not end in Shift")
        if any(isinstance(a, Shift) for a in actions[:-1]):
            raise TransitionError(f"{doc.doc_key}: sentence {i}: Shift before end of action list")
        for n, action in enumerate(actions, start=1):
            try:
                state = apply(state, action, system)
            except TransitionError as exc:
                raise TransitionError(f"{doc.doc_key}: sentence {i}, action {n}: {exc}") from exc
    return state
