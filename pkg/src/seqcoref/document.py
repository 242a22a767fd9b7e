"""Documents, spans and clusterings.

Word indices are 1-based and inclusive everywhere in this package; the CoNLL
reader and writer are the only places that see 0-based sentence-relative
positions.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence


class DocumentError(ValueError):
    pass


class Span(NamedTuple):
    """A potential mention: words ``start..end`` (1-based, inclusive)."""

    start: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.start + 1


def order_key(span: Span) -> tuple[int, int]:
    # earlier end first; on a shared end the later start comes first
    return (span.end, -span.start)


def mention_order(spans: Iterable[Span]) -> list[Span]:
    """Sort spans into processing order.

    Spans are ordered by end point; among spans sharing an end point the one
    with the later start point (the shorter, inner span) comes first.
    """
    return sorted(spans, key=order_key)


@dataclass(frozen=True)
class Document:
    doc_key: str
    words: tuple[str, ...]
    sentence_ends: tuple[int, ...]
    speakers: tuple[str, ...]
    genre: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "sentence_ends", tuple(self.sentence_ends))
        object.__setattr__(self, "speakers", tuple(self.speakers))
        if not self.words:
            raise DocumentError(f"{self.doc_key}: document has no words")
        for w in self.words:
            if not w or any(c.isspace() for c in w):
                raise DocumentError(f"{self.doc_key}: invalid word {w!r}")
        ends = self.sentence_ends
        if not ends or ends[0] < 1 or ends[-1] != len(self.words):
            raise DocumentError(
                f"{self.doc_key}: sentence ends {ends!r} do not cover {len(self.words)} words"
            )
        if any(b <= a for a, b in zip(ends, ends[1:])):
            raise DocumentError(f"{self.doc_key}: sentence ends not strictly increasing")
        if len(self.speakers) != len(ends):
            raise DocumentError(
                f"{self.doc_key}: {len(self.speakers)} speakers for {len(ends)} sentences"
            )

    @classmethod
    def from_sentences(
        cls,
        doc_key: str,
        sentences: Sequence[Sequence[str]],
        speakers: Optional[Sequence[str]] = None,
        genre: Optional[str] = None,
    ) -> "Document":
        words: list[str] = []
        ends: list[int] = []
        for sent in sentences:
            words.extend(sent)
            ends.append(len(words))
        if speakers is None:
            speakers = [""] * len(ends)
        return cls(doc_key, tuple(words), tuple(ends), tuple(speakers), genre)

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_ends)

    def __len__(self) -> int:
        return len(self.words)

    def sentence_bounds(self, i: int) -> tuple[int, int]:
        """First and last word index of sentence ``i`` (1-based)."""
        if not 1 <= i <= self.num_sentences:
            raise IndexError(f"sentence index {i} out of range 1..{self.num_sentences}")
        first = self.sentence_ends[i - 2] + 1 if i > 1 else 1
        return first, self.sentence_ends[i - 1]

    def sentence_words(self, i: int) -> tuple[str, ...]:
        first, last = self.sentence_bounds(i)
        return self.words[first - 1 : last]

    def sentence_of(self, word: int) -> int:
        """Sentence index containing word index ``word``."""
        if not 1 <= word <= len(self.words):
            raise IndexError(f"word index {word} out of range 1..{len(self.words)}")
        return bisect.bisect_left(self.sentence_ends, word) + 1

    def sentence_of_span(self, span: Span) -> Optional[int]:
        """Sentence containing the whole span, or None if it crosses a boundary."""
        if span.start > span.end or span.start < 1 or span.end > len(self.words):
            return None
        i = self.sentence_of(span.start)
        return i if span.end <= self.sentence_ends[i - 1] else None

    def span_words(self, span: Span) -> tuple[str, ...]:
        return self.words[span.start - 1 : span.end]

    def potential_mentions(self, i: int) -> set[Span]:
        return potential_mentions(self, i)


def potential_mentions(doc: Document, i: int) -> set[Span]:
    """All spans lying inside sentence ``i``."""
    first, last = doc.sentence_bounds(i)
    return {Span(a, b) for a in range(first, last + 1) for b in range(a, last + 1)}


@dataclass(frozen=True)
class Clustering:
    """An ordered sequence of pairwise-disjoint span sets.

    Clusters keep their creation order; the 1-based position of a cluster is
    the number shown in bracket annotations.
    """

    clusters: tuple[frozenset[Span], ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        clusters = tuple(frozenset(Span(*m) for m in c) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        index: dict[Span, int] = {}
        for k, cluster in enumerate(clusters, start=1):
            if not cluster:
                raise DocumentError(f"cluster {k} is empty")
            for m in cluster:
                if m.start > m.end:
                    raise DocumentError(f"span {m} has start after end")
                if m in index:
                    raise DocumentError(f"span {m} is in clusters {index[m]} and {k}")
                index[m] = k
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, *clusters: Iterable[Sequence[int]]) -> "Clustering":
        return cls(tuple(frozenset(Span(*m) for m in c) for c in clusters))

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self) -> Iterator[frozenset[Span]]:
        return iter(self.clusters)

    def cluster(self, k: int) -> frozenset[Span]:
        """Cluster number ``k`` (1-based)."""
        if not 1 <= k <= len(self.clusters):
            raise IndexError(f"cluster index {k} out of range 1..{len(self.clusters)}")
        return self.clusters[k - 1]

    def cluster_of(self, m: Span) -> Optional[int]:
        return self._index.get(Span(*m))

    def mentions(self) -> set[Span]:
        return set(self._index)

    def as_partition(self) -> frozenset[frozenset[Span]]:
        """Order-free view, for comparing clusterings built in different orders."""
        return frozenset(self.clusters)

    def without_singletons(self) -> "Clustering":
        return Clustering(tuple(c for c in self.clusters if len(c) >= 2))

    def replace(self, k: int, cluster: frozenset[Span]) -> "Clustering":
        clusters = list(self.clusters)
        clusters[k - 1] = cluster
        return Clustering(tuple(clusters))

    def append(self, cluster: frozenset[Span]) -> "Clustering":
        return Clustering(self.clusters + (cluster,))


def cluster_of(k: Clustering, m: Span) -> Optional[int]:
    return k.cluster_of(m)
