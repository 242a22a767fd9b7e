"""Reading and writing the CoNLL-2012 column format.

Only the columns this package needs are interpreted: document key, part,
word number, word, speaker and the final coreference column.  Everything
else is passed over on reading and written as ``-``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .document import Clustering, Document, DocumentError, Span, order_key

SPEAKER_COLUMN = 9
# hand-built corpus shipped with the package (see scripts/make_mini_corpus.py)
MINI_CORPUS = Path(__file__).parent / "data" / "mini.conll"
_BEGIN = re.compile(r"^#begin document \((.*)\);\s*part\s+(\S+)\s*$")
_COREF_PART = re.compile(r"^(\()?(\d+)(\))?$")


class ConllError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CorpusEntry:
    document: Document
    gold: Clustering
    part: str = "000"

    @property
    def key(self) -> str:
        return entry_key(self.document.doc_key, self.part)


def entry_key(doc_key: str, part: str) -> str:
    return f"({doc_key}); part {part}"


def genre_of(doc_key: str) -> Optional[str]:
    # OntoNotes keys look like "bc/cctv/00/cctv_0000"; the first segment is the genre
    return doc_key.split("/", 1)[0] if "/" in doc_key else None


def filter_singletons(k: Clustering) -> Clustering:
    return k.without_singletons()


def _parse_coref(cell: str, lineno: int) -> list[tuple[str, int]]:
    """Split a coref cell into ("open"|"close"|"unit", id) events."""
    if cell == "-":
        return []
    events = []
    for piece in cell.split("|"):
        m = _COREF_PART.match(piece)
        if not m or (m.group(1) is None and m.group(3) is None):
            raise ConllError(f"bad coreference cell {cell!r}", lineno)
        cid = int(m.group(2))
        if m.group(1) and m.group(3):
            events.append(("unit", cid))
        elif m.group(1):
            events.append(("open", cid))
        else:
            events.append(("close", cid))
    return events


class _DocBuilder:
    def __init__(self, doc_key: str, part: str, lineno: int, speaker_column: int):
        self.doc_key = doc_key
        self.part = part
        self.lineno = lineno
        self.speaker_column = speaker_column
        self.sentences: list[list[str]] = []
        self.speakers: list[str] = []
        self.current: list[str] = []
        self.current_speaker = ""
        self.open: dict[int, list[tuple[int, int]]] = {}  # id -> [(word index, line)]
        self.spans: dict[int, list[Span]] = {}

    def add_row(self, cols: list[str], lineno: int) -> None:
        if len(cols) < 4:
            raise ConllError(f"expected at least 4 columns, got {len(cols)}", lineno)
        try:
            word_no = int(cols[2])
        except ValueError:
            raise ConllError(f"word number {cols[2]!r} is not an integer", lineno) from None
        if word_no != len(self.current):
            raise ConllError(f"word number {word_no}, expected {len(self.current)}", lineno)
        if not self.current:
            speaker = cols[self.speaker_column] if len(cols) > self.speaker_column + 1 else "-"
            self.current_speaker = "" if speaker == "-" else speaker
        self.current.append(cols[3])
        index = sum(len(s) for s in self.sentences) + len(self.current)
        coref = cols[-1] if len(cols) > 4 else "-"
        for kind, cid in _parse_coref(coref, lineno):
            if kind == "unit":
                self.spans.setdefault(cid, []).append(Span(index, index))
            elif kind == "open":
                self.open.setdefault(cid, []).append((index, lineno))
            else:
                stack = self.open.get(cid)
                if not stack:
                    raise ConllError(f"closing bracket for cluster {cid} was never opened", lineno)
                self.spans.setdefault(cid, []).append(Span(stack.pop()[0], index))

    def end_sentence(self, lineno: int) -> None:
        if not self.current:
            return
        unclosed = sorted((stack[0][1], cid) for cid, stack in self.open.items() if stack)
        if unclosed:
            line, cid = unclosed[0]
            raise ConllError(f"coreference bracket for cluster {cid} is never closed in its sentence", line)
        self.sentences.append(self.current)
        self.speakers.append(self.current_speaker)
        self.current = []

    def build(self, lineno: int) -> CorpusEntry:
        self.end_sentence(lineno)
        if not self.sentences:
            raise ConllError(f"document {self.doc_key!r} has no tokens", self.lineno)
        try:
            doc = Document.from_sentences(self.doc_key, self.sentences, self.speakers, genre_of(self.doc_key))
            clusters = [frozenset(spans) for spans in self.spans.values()]
            clusters.sort(key=lambda c: order_key(min(c, key=order_key)))
            gold = Clustering(tuple(clusters))
        except DocumentError as exc:
            raise ConllError(str(exc), self.lineno) from exc
        return CorpusEntry(doc, gold, self.part)


def read_conll(source: Union[IO[str], Iterable[str]], speaker_column: int = SPEAKER_COLUMN) -> Iterator[CorpusEntry]:
    """Yield one entry per ``#begin document`` ... ``#end document`` block."""
    builder: Optional[_DocBuilder] = None
    lineno = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#begin document"):
            if builder is not None:
                raise ConllError("#begin document before #end document", lineno)
            m = _BEGIN.match(line)
            if not m:
                raise ConllError(f"malformed document header {line!r}", lineno)
            builder = _DocBuilder(m.group(1), m.group(2), lineno, speaker_column)
        elif line.startswith("#end document"):
            if builder is None:
                raise ConllError("#end document without #begin document", lineno)
            yield builder.build(lineno)
            builder = None
        elif not line.strip():
            if builder is not None:
                builder.end_sentence(lineno)
        elif line.startswith("#"):
            continue
        else:
            if builder is None:
                raise ConllError("token row outside a document", lineno)
            builder.add_row(line.split(), lineno)
    if builder is not None:
        raise ConllError(f"missing #end document for {builder.doc_key!r}", lineno)


def read_conll_file(path: Union[str, Path], speaker_column: int = SPEAKER_COLUMN) -> list[CorpusEntry]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(read_conll(f, speaker_column))


def conll_paths(path: Union[str, Path]) -> list[Path]:
    """A file, or every ``*.conll`` below a directory in lexicographic order."""
    path = Path(path)
    if path.is_dir():
        return sorted(path.rglob("*.conll"))
    return [path]


def read_corpus(path: Union[str, Path], speaker_column: int = SPEAKER_COLUMN) -> list[CorpusEntry]:
    entries = []
    for p in conll_paths(path):
        entries.extend(read_conll_file(p, speaker_column))
    return entries


def _coref_cells(doc: Document, pred: Clustering) -> list[str]:
    opens: dict[int, list[tuple[int, int]]] = {}
    closes: dict[int, list[tuple[int, int]]] = {}
    units: dict[int, list[int]] = {}
    for cid, cluster in enumerate(pred):
        for m in cluster:
            if doc.sentence_of_span(m) is None:
                raise ConllError(f"{doc.doc_key}: predicted span {m} is outside one sentence")
            if m.start == m.end:
                units.setdefault(m.start, []).append(cid)
            else:
                opens.setdefault(m.start, []).append((m.width, cid))
                closes.setdefault(m.end, []).append((m.width, cid))
    cells = []
    for w in range(1, len(doc) + 1):
        # closes before opens so that a span ending here pops its own opener;
        # same-cluster spans that strictly cross cannot be expressed at all
        parts = [f"{cid})" for _, cid in sorted(closes.get(w, ()), key=lambda x: (x[0], x[1]))]
        parts += [f"({cid}" for _, cid in sorted(opens.get(w, ()), key=lambda x: (-x[0], x[1]))]
        parts += [f"({cid})" for cid in sorted(units.get(w, ()))]
        cells.append("|".join(parts) if parts else "-")
    return cells


def write_conll(doc: Document, pred: Clustering, sink: IO[str], part: str = "000") -> None:
    """Write ``doc`` with ``pred`` in the coreference column.

    Cluster ids are the 0-based cluster positions in ``pred``.
    """
    cells = iter(_coref_cells(doc, pred))
    sink.write(f"#begin document ({doc.doc_key}); part {part}\n")
    for i in range(1, doc.num_sentences + 1):
        speaker = doc.speakers[i - 1] or "-"
        for n, word in enumerate(doc.sentence_words(i)):
            cols = [doc.doc_key, str(int(part)) if part.isdigit() else part, str(n), word,
                    "-", "-", "-", "-", "-", speaker, "-", next(cells)]
            sink.write("\t".join(cols) + "\n")
        sink.write("\n")
    sink.write("#end document\n")


def write_corpus(entries: Iterable[tuple[Document, Clustering, str]], sink: IO[str]) -> None:
    for doc, pred, part in entries:
        write_conll(doc, pred, sink, part)
