from __future__ import annotations

import pytest
from hypothesis import strategies as st

from seqcoref.conll import MINI_CORPUS, CorpusEntry, read_conll_file
from seqcoref.document import Clustering, Document, Span

# the restaurant dialogue, also the first document of the mini corpus
RESTAURANT_SENTENCES = [
    "I still have n't gone to that fresh French restaurant by your house".split(),
    "I 'm like dying to go there".split(),
    "You mean the one right next to the apartment".split(),
    "yeah yeah yeah".split(),
]
RESTAURANT_SPEAKERS = ["Speaker-A", "Speaker-A", "Speaker-B", "Speaker-B"]
# I(1) I(14) You(21) | your house(12-13) the apartment(28-29) | restaurant(7-13) the one ...(23-29)
RESTAURANT_GOLD = Clustering.of(
    [(1, 1), (14, 14), (21, 21)],
    [(12, 13), (28, 29)],
    [(7, 13), (23, 29)],
)


@pytest.fixture(scope="session")
def mini_corpus() -> list[CorpusEntry]:
    return read_conll_file(MINI_CORPUS)


@pytest.fixture(scope="session")
def restaurant() -> CorpusEntry:
    doc = Document.from_sentences("restaurant", RESTAURANT_SENTENCES, RESTAURANT_SPEAKERS)
    return CorpusEntry(doc, RESTAURANT_GOLD)


VOCAB = ["a", "b", "c", "the", "dog", "he", "it", "saw", ";", "SHIFT", "->", "##"]


@st.composite
def documents(draw, max_sentences: int = 5, max_len: int = 6, vocab=("a", "b", "c", "the", "dog", "he")):
    n = draw(st.integers(1, max_sentences))
    sentences = [draw(st.lists(st.sampled_from(vocab), min_size=1, max_size=max_len)) for _ in range(n)]
    speakers = [draw(st.sampled_from(["A", "B", ""])) for _ in range(n)]
    return Document.from_sentences("hyp", sentences, speakers)


@st.composite
def gold_clusterings(draw, doc: Document, density: float = 0.3) -> Clustering:
    spans = []
    for i in range(1, doc.num_sentences + 1):
        first, last = doc.sentence_bounds(i)
        for a in range(first, last + 1):
            for b in range(a, min(last, a + 3) + 1):
                if draw(st.floats(0, 1)) < density:
                    spans.append(Span(a, b))
    if not spans:
        return Clustering()
    labels = draw(st.lists(st.integers(0, max(1, len(spans) // 2)), min_size=len(spans), max_size=len(spans)))
    groups: dict[int, list[Span]] = {}
    for m, g in zip(spans, labels):
        groups.setdefault(g, []).append(m)
    return Clustering(tuple(frozenset(c) for c in groups.values()))


@st.composite
def annotated_documents(draw, **kw) -> CorpusEntry:
    doc = draw(documents(**kw))
    return CorpusEntry(doc, draw(gold_clusterings(doc)))


# acceptance criteria report one line each; they are echoed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'pass' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
