import io

import pytest
from hypothesis import assume, given, settings

from seqcoref.conll import ConllError, conll_paths, read_conll, read_corpus, write_conll
from seqcoref.document import Clustering

from conftest import annotated_documents

MINIMAL = """\
#begin document (nw/test/00/doc); part 000
nw/test/00/doc	0	0	John	NNP	-	-	-	-	spk1	*	(0)
nw/test/00/doc	0	1	saw	VBD	-	-	-	-	spk1	*	-
nw/test/00/doc	0	2	his	PRP$	-	-	-	-	spk1	*	(0)|(1
nw/test/00/doc	0	3	dog	NN	-	-	-	-	spk1	*	1)

nw/test/00/doc	0	0	It	PRP	-	-	-	-	spk2	*	(1)
nw/test/00/doc	0	1	barked	VBD	-	-	-	-	spk2	*	-

#end document
"""


def read_one(text):
    (entry,) = list(read_conll(io.StringIO(text)))
    return entry


def test_minimal_document():
    entry = read_one(MINIMAL)
    doc = entry.document
    assert entry.key == "(nw/test/00/doc); part 000"
    assert doc.words == ("John", "saw", "his", "dog", "It", "barked")
    assert doc.sentence_ends == (4, 6)
    assert doc.speakers == ("spk1", "spk2")
    assert doc.genre == "nw"
    assert entry.gold.clusters == Clustering.of([(1, 1), (3, 3)], [(3, 4), (5, 5)]).clusters


def test_crlf_input():
    entry = read_one(MINIMAL.replace("\n", "\r\n"))
    assert entry.document.words[-1] == "barked"


def test_multiple_documents_and_parts():
    text = MINIMAL + MINIMAL.replace("part 000", "part 001")
    keys = [e.key for e in read_conll(io.StringIO(text))]
    assert keys == ["(nw/test/00/doc); part 000", "(nw/test/00/doc); part 001"]


@pytest.mark.parametrize(
    "broken, line",
    [
        (MINIMAL.replace("(0)|(1", "(0)|(3").replace("\t1)\n", "\t-\n"), 4),
        (MINIMAL.replace("\t(1)\n", "\t1)\n"), 7),
        (MINIMAL.replace("\t0\tJohn", "\t5\tJohn"), 2),
        (MINIMAL.replace("#end document\n", ""), 9),
        (MINIMAL.replace("(0)", "(x)"), 2),
    ],
)
def test_malformed_input_reports_line(broken, line):
    with pytest.raises(ConllError) as info:
        list(read_conll(io.StringIO(broken)))
    assert info.value.line == line


def test_write_dense_ids_and_speaker():
    entry = read_one(MINIMAL)
    pred = Clustering.of([(3, 4), (5, 5)], [(1, 1)])
    out = io.StringIO()
    write_conll(entry.document, pred, out)
    rows = [line.split("\t") for line in out.getvalue().splitlines() if line and not line.startswith("#")]
    assert all(len(r) == 12 for r in rows)
    assert [r[-1] for r in rows] == ["(1)", "-", "(0", "0)", "(0)", "-"]
    assert rows[0][9] == "spk1" and rows[4][9] == "spk2"


def test_write_nested_brackets_order():
    entry = read_one(MINIMAL)
    pred = Clustering.of([(1, 3)], [(1, 1)], [(2, 3)])
    out = io.StringIO()
    write_conll(entry.document, pred, out)
    again = read_one(out.getvalue())
    assert again.gold.as_partition() == pred.as_partition()
    cells = [line.split("\t")[-1] for line in out.getvalue().splitlines() if line.startswith("nw")]
    assert cells[:3] == ["(0|(1)", "(2", "2)|0)"]


def test_write_touching_spans_of_one_cluster():
    entry = read_one(MINIMAL)
    pred = Clustering.of([(1, 2), (2, 3)])
    out = io.StringIO()
    write_conll(entry.document, pred, out)
    assert read_one(out.getvalue()).gold.as_partition() == pred.as_partition()


def strictly_crossing(k):
    return any(
        a.start < b.start < a.end < b.end for c in k for a in c for b in c
    )


def test_write_rejects_cross_sentence_span():
    entry = read_one(MINIMAL)
    with pytest.raises(ConllError):
        write_conll(entry.document, Clustering.of([(4, 5)]), io.StringIO())


@settings(max_examples=100, deadline=None)
@given(annotated_documents())
def test_write_read_roundtrip(entry):
    assume(not strictly_crossing(entry.gold))
    out = io.StringIO()
    write_conll(entry.document, entry.gold, out, entry.part)
    again = read_one(out.getvalue())
    assert again.document.words == entry.document.words
    assert again.document.sentence_ends == entry.document.sentence_ends
    assert again.gold.as_partition() == entry.gold.as_partition()


def test_mini_corpus_roundtrip(mini_corpus, tmp_path):
    path = tmp_path / "copy.conll"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for e in mini_corpus:
            write_conll(e.document, e.gold, f, e.part)
    again = read_corpus(path)
    assert [e.key for e in again] == [e.key for e in mini_corpus]
    for a, b in zip(again, mini_corpus):
        assert a.document == b.document
        assert a.gold.as_partition() == b.gold.as_partition()


def test_mini_corpus_coverage(mini_corpus):
    assert len(mini_corpus) >= 20
    multi_sentence = within_sentence = nested = singleton = 0
    speakers = set()
    for e in mini_corpus:
        doc = e.document
        speakers |= {s for s in doc.speakers if s}
        for cluster in e.gold:
            sentences = [doc.sentence_of_span(m) for m in cluster]
            singleton += len(cluster) == 1
            multi_sentence += len(set(sentences)) > 1
            within_sentence += len(sentences) != len(set(sentences))
        spans = e.gold.mentions()
        nested += any(a != b and a.start <= b.start and b.end <= a.end for a in spans for b in spans)
    assert min(multi_sentence, within_sentence, nested, singleton) > 0
    assert len(speakers) >= 2
    # repeated identical surface strings among gold mentions of one document
    assert any(
        len({e.document.span_words(m) for m in e.gold.mentions()}) < len(e.gold.mentions()) for e in mini_corpus
    )


def test_directory_globbing(tmp_path):
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "x.conll").write_text(MINIMAL)
    (tmp_path / "a.conll").write_text(MINIMAL.replace("part 000", "part 002"))
    (tmp_path / "notes.txt").write_text("ignored")
    assert [p.name for p in conll_paths(tmp_path)] == ["a.conll", "x.conll"]
    assert [e.part for e in read_corpus(tmp_path)] == ["002", "000"]
