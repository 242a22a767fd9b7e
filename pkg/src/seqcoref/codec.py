"""Text encodings exchanged with the seq2seq predictor.

Input strings render the sentences around the focus sentence, with existing
clusters bracketed as ``[k ... ]``, sentences separated by ``#``, the focus
sentence opened by ``|`` and closed by ``**``::

    Speaker-A [1 I ] still have n't gone ... # Speaker-A [1 I ] 'm like dying
    to go there | # Speaker-B You mean the one right next to the apartment **

Target strings list the actions for the focus sentence, each mention written
as its words followed by ``##`` and the (up to) three words after it::

    You ## mean the one -> [1 ; the apartment ## yeah yeah yeah -> your house
    ## I 'm like ; SHIFT

``parse_actions`` reads arbitrary model output back into actions; it never
raises on bad output and reports every anomaly in :class:`ParseDiagnostics`.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

from .document import Document, Span
from .transitions import Action, AddMention, Append, Link, Shift, State, SystemKind

TRAINING_INPUT_BUDGET = 2048
INFERENCE_INPUT_BUDGET = 3000
OUTPUT_BUDGET = 384

SENTENCE_SEP = "#"
FOCUS_OPEN = "|"
FOCUS_CLOSE = "**"
CONTEXT_SEP = "##"
ARROW = "->"
ACTION_SEP = ";"
SHIFT = "SHIFT"
NEW = "NEW"
CONTEXT_WORDS = 3

_CLUSTER_REF = re.compile(r"^\[(\d+)$")

TokenCounter = Callable[[str], int]


class EncodingError(ValueError):
    pass


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def count_tokens(text: str, counter: Optional[TokenCounter] = None) -> int:
    return (counter or whitespace_tokens)(text)


@dataclass(frozen=True)
class EncodeOptions:
    input_budget: int = TRAINING_INPUT_BUDGET
    output_budget: int = OUTPUT_BUDGET
    annotate_clusters: bool = True
    fill_context: bool = True
    include_speaker: bool = True
    include_genre: bool = True

    def __post_init__(self) -> None:
        if self.input_budget <= 0 or self.output_budget <= 0:
            raise ValueError("token budgets must be positive")

    @classmethod
    def for_system(cls, system: SystemKind, *, inference: bool = False, **overrides) -> "EncodeOptions":
        opts = cls(
            input_budget=INFERENCE_INPUT_BUDGET if inference else TRAINING_INPUT_BUDGET,
            annotate_clusters=system is not SystemKind.LINK_ONLY,
        )
        return replace(opts, **overrides)

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class WindowMap:
    """Where the document words of an encoded input ended up.

    ``positions`` pairs each rendered word's token offset in the input string
    with its document word index.
    """

    positions: tuple[tuple[int, int], ...]
    first_word: int
    last_word: int
    focus_first: int
    focus_last: int

    def word_at(self, token_offset: int) -> Optional[int]:
        return dict(self.positions).get(token_offset)


def _speaker_tokens(doc: Document, j: int, opts: EncodeOptions) -> list[str]:
    speaker = doc.speakers[j - 1]
    if opts.include_speaker and speaker and speaker != "-":
        return [speaker]
    return []


def _sentence_tokens(state: State, j: int, annotate: bool) -> list[tuple[str, Optional[int]]]:
    doc = state.doc
    first, last = doc.sentence_bounds(j)
    opens: dict[int, list[tuple[int, int]]] = {}
    closes: dict[int, list[int]] = {}
    if annotate:
        for k, cluster in enumerate(state.clustering, start=1):
            for m in cluster:
                if first <= m.start and m.end <= last:
                    opens.setdefault(m.start, []).append((m.width, k))
                    closes.setdefault(m.end, []).append(m.width)
    out: list[tuple[str, Optional[int]]] = []
    for w in range(first, last + 1):
        # longer spans open first, shorter spans close first
        for _, k in sorted(opens.get(w, ()), key=lambda x: (-x[0], x[1])):
            out.append((f"[{k}", None))
        out.append((doc.words[w - 1], w))
        for _ in sorted(closes.get(w, ())):
            out.append(("]", None))
    return out


class _Renderer:
    def __init__(self, state: State, opts: EncodeOptions):
        self.state = state
        self.opts = opts
        doc = state.doc
        i = state.focus
        self.genre = [(doc.genre, None)] if opts.include_genre and doc.genre else []
        self.blocks: dict[int, list[tuple[str, Optional[int]]]] = {}
        for j in range(1, doc.num_sentences + 1):
            body = [(t, None) for t in _speaker_tokens(doc, j, opts)]
            body += _sentence_tokens(state, j, opts.annotate_clusters and j < i)
            self.blocks[j] = body

    def render(self, first: int, last: int) -> list[tuple[str, Optional[int]]]:
        i = self.state.focus
        out = list(self.genre)
        for j in range(first, last + 1):
            if j == i:
                out.append((FOCUS_OPEN, None))
            if j > first:
                out.append((SENTENCE_SEP, None))
            out.extend(self.blocks[j])
            if j == i:
                out.append((FOCUS_CLOSE, None))
        return out


def _fits(tokens: list[tuple[str, Optional[int]]], opts: EncodeOptions, counter: Optional[TokenCounter]) -> bool:
    return count_tokens(" ".join(t for t, _ in tokens), counter) <= opts.input_budget


def encode_input(
    state: State, opts: EncodeOptions = EncodeOptions(), counter: Optional[TokenCounter] = None
) -> tuple[str, WindowMap]:
    """Render ``state`` as a model input string within the token budget.

    Earlier sentences are dropped from the front when the input is too long;
    with ``fill_context`` the sentences after the focus are added while they
    fit.
    """
    if state.is_final:
        raise EncodingError("cannot encode a final state")
    doc, i = state.doc, state.focus
    renderer = _Renderer(state, opts)
    if not _fits(renderer.render(i, i), opts, counter):
        raise EncodingError(
            f"{doc.doc_key}: focus sentence {i} alone exceeds the input budget of {opts.input_budget}"
        )
    # token counts grow with every sentence added, so bisect for the window edges
    lo, hi = 1, i
    while lo < hi:
        mid = (lo + hi) // 2
        if _fits(renderer.render(mid, i), opts, counter):
            hi = mid
        else:
            lo = mid + 1
    first = lo
    last = i
    if opts.fill_context:
        lo, hi = i, doc.num_sentences
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if _fits(renderer.render(first, mid), opts, counter):
                lo = mid
            else:
                hi = mid - 1
        last = lo
    tokens = renderer.render(first, last)
    positions = tuple((n, w) for n, (_, w) in enumerate(tokens) if w is not None)
    focus_first, focus_last = doc.sentence_bounds(i)
    window = WindowMap(
        positions=positions,
        first_word=doc.sentence_bounds(first)[0],
        last_word=doc.sentence_bounds(last)[1],
        focus_first=focus_first,
        focus_last=focus_last,
    )
    return " ".join(t for t, _ in tokens), window


def mention_context(m: Span, doc: Document) -> tuple[str, ...]:
    return doc.words[m.end : m.end + CONTEXT_WORDS]


def serialize_mention(m: Span, doc: Document) -> str:
    text = " ".join(doc.span_words(m))
    followers = mention_context(m, doc)
    if followers:
        text += f" {CONTEXT_SEP} " + " ".join(followers)
    return text


def encode_action(action: Action, doc: Document) -> str:
    if isinstance(action, Link):
        return f"{serialize_mention(action.source, doc)} {ARROW} {serialize_mention(action.target, doc)}"
    if isinstance(action, Append):
        return f"{serialize_mention(action.source, doc)} {ARROW} [{action.cluster}"
    if isinstance(action, AddMention):
        return f"{serialize_mention(action.source, doc)} {ARROW} {NEW}"
    raise EncodingError(f"cannot encode {action!r} as a clause")


def encode_actions(actions: Sequence[Action], state: State) -> str:
    clauses = [encode_action(a, state.doc) for a in actions if not isinstance(a, Shift)]
    return f" {ACTION_SEP} ".join(clauses + [SHIFT])


# ---------------------------------------------------------------------------
# parsing model output


@dataclass
class ParseRecord:
    sentence: int
    raw: str
    kind: str  # ok | hallucination | ambiguous | skipped | implicit-shift
    detail: str = ""


@dataclass
class ParseDiagnostics:
    total_actions: int = 0
    hallucinations: int = 0
    ambiguous: int = 0
    skipped: int = 0
    implicit_shifts: int = 0
    records: list[ParseRecord] = field(default_factory=list)

    def note(self, record: ParseRecord) -> None:
        self.records.append(record)
        if record.kind == "hallucination":
            self.hallucinations += 1
        elif record.kind == "ambiguous":
            self.ambiguous += 1
        elif record.kind == "skipped":
            self.skipped += 1
        elif record.kind == "implicit-shift":
            self.implicit_shifts += 1

    @property
    def anomalies(self) -> int:
        return self.hallucinations + self.ambiguous + self.skipped + self.implicit_shifts

    def merge(self, other: "ParseDiagnostics") -> None:
        self.total_actions += other.total_actions
        self.hallucinations += other.hallucinations
        self.ambiguous += other.ambiguous
        self.skipped += other.skipped
        self.implicit_shifts += other.implicit_shifts
        self.records.extend(other.records)


class _Malformed(Exception):
    pass


def _find(words: Sequence[str], seq: Sequence[str], lo: int, hi: int) -> list[int]:
    """Start indices p (1-based) with words[p..p+len-1] == seq inside [lo, hi]."""
    n = len(seq)
    if n == 0:
        return []
    seq = list(seq)
    return [p for p in range(lo, hi - n + 2) if list(words[p - 1 : p - 1 + n]) == seq]


class _ClauseParser:
    def __init__(self, toks: list[str], state: State, window: WindowMap):
        self.toks = toks
        self.state = state
        self.words = state.doc.words
        self.source_region = (window.focus_first, window.focus_last)
        self.target_region = (min(window.first_word, window.focus_first), window.focus_last)

    def locate(self, mention: Sequence[str], ctx: Sequence[str], region: tuple[int, int]) -> list[Span]:
        found = []
        for p in _find(self.words, mention, *region):
            end = p + len(mention) - 1
            if list(self.words[end : end + len(ctx)]) == list(ctx):
                found.append(Span(p, end))
        return found

    def _next(self, pos: int, wanted: set[str]) -> Optional[int]:
        for q in range(pos, len(self.toks)):
            if self.toks[q] in wanted:
                return q
        return None

    def read_mention(self, pos: int, hard: set[str], region: tuple[int, int]) -> tuple[list[str], int]:
        """Mention words from ``pos`` up to a hard delimiter.

        A ``;`` inside the words is kept only when the resulting word
        sequence occurs in ``region``; otherwise the clause ends there.
        """
        stop = self._next(pos, hard | {ACTION_SEP})
        if stop is None:
            return self.toks[pos:], len(self.toks)
        if self.toks[stop] == ACTION_SEP:
            far = self._next(pos, hard)
            if far is not None:
                extended = self.toks[pos:far]
                if ARROW not in extended and _find(self.words, extended, *region):
                    return extended, far
        return self.toks[pos:stop], stop

    def read_context(self, pos: int, mention: list[str], region: tuple[int, int], follow: Callable[[int], bool]) -> tuple[list[str], int]:
        """Up to three context words after ``##``, choosing the split point.

        A split of length j is valid when ``follow(pos + j)`` accepts the next
        token; among valid splits the longest locatable one wins.
        """
        valid = []
        for j in range(min(CONTEXT_WORDS, len(self.toks) - pos), -1, -1):
            ctx = self.toks[pos : pos + j]
            if ARROW in ctx or CONTEXT_SEP in ctx:
                continue
            if follow(pos + j):
                valid.append(j)
        if not valid:
            raise _Malformed("context not followed by a delimiter")
        for j in valid:
            if self.locate(mention, self.toks[pos : pos + j], region):
                return self.toks[pos : pos + j], pos + j
        j = valid[0]
        return self.toks[pos : pos + j], pos + j

    def side(self, pos: int, hard: set[str], region: tuple[int, int], follow: Callable[[int], bool]):
        mention, pos = self.read_mention(pos, hard, region)
        if not mention:
            raise _Malformed("empty mention")
        ctx: list[str] = []
        if pos < len(self.toks) and self.toks[pos] == CONTEXT_SEP:
            ctx, pos = self.read_context(pos + 1, mention, region, follow)
        return mention, ctx, pos

    def at_clause_end(self, q: int) -> bool:
        return q >= len(self.toks) or self.toks[q] == ACTION_SEP

    def is_terminator(self, pos: int) -> bool:
        if self.toks[pos] != SHIFT:
            return False
        if pos + 1 < len(self.toks) and self.toks[pos + 1] in (CONTEXT_SEP, ARROW):
            return False
        nxt = self._next(pos + 1, {ACTION_SEP})
        rest = self.toks[pos + 1 : nxt if nxt is not None else len(self.toks)]
        return ARROW not in rest

    def skip_clause(self, pos: int) -> int:
        """Position where the next clause may start, or of a terminating SHIFT."""
        for q in range(pos, len(self.toks)):
            if self.toks[q] == ACTION_SEP:
                return q + 1
            if self.is_terminator(q):
                return q
        return len(self.toks)


def parse_actions(output: str, state: State, window: WindowMap) -> tuple[list[Action], ParseDiagnostics]:
    """Read model output into actions for the focus sentence of ``state``."""
    diag = ParseDiagnostics()
    actions: list[Action] = []
    toks = output.split()
    p = _ClauseParser(toks, state, window)
    sentence = state.focus
    pos = 0
    while True:
        if pos >= len(toks):
            diag.note(ParseRecord(sentence, "", "implicit-shift", "output ended without SHIFT"))
            break
        if p.is_terminator(pos):
            break
        start = pos
        diag.total_actions += 1
        try:
            src, src_ctx, pos = p.side(
                pos, {CONTEXT_SEP, ARROW}, p.source_region, lambda q: q < len(toks) and toks[q] == ARROW
            )
            if pos >= len(toks) or toks[pos] != ARROW:
                raise _Malformed("missing ->")
            pos += 1
            if pos >= len(toks):
                raise _Malformed("missing target")
            target_tok = toks[pos]
            ref = _CLUSTER_REF.match(target_tok)
            target: object
            if ref or target_tok == NEW:
                pos += 1
                if not p.at_clause_end(pos):
                    raise _Malformed("unexpected words after target")
                target = int(ref.group(1)) if ref else NEW
                tgt_found: list[Span] = []
            else:
                tgt, tgt_ctx, pos = p.side(pos, {CONTEXT_SEP}, p.target_region, p.at_clause_end)
                if not p.at_clause_end(pos):
                    raise _Malformed("unexpected words after target")
                tgt_found = p.locate(tgt, tgt_ctx, p.target_region)
                target = None
        except _Malformed as exc:
            pos = p.skip_clause(start + 1)
            diag.note(ParseRecord(sentence, " ".join(toks[start:pos]), "skipped", str(exc)))
            continue
        raw = " ".join(toks[start:pos])
        # exactly one separator between clauses; a second ";" starts a mention
        if pos < len(toks) and toks[pos] == ACTION_SEP:
            pos += 1
        src_found = p.locate(src, src_ctx, p.source_region)
        if isinstance(target, int) and not 1 <= target <= len(state.clustering):
            diag.note(ParseRecord(sentence, raw, "skipped", f"cluster [{target} does not exist"))
            continue
        if not src_found or (target is None and not tgt_found):
            diag.note(ParseRecord(sentence, raw, "hallucination"))
            continue
        # nearest to the focus sentence: the rightmost match
        source = src_found[-1]
        if isinstance(target, int):
            actions.append(Append(source, target))
        elif target == NEW:
            actions.append(AddMention(source))
        else:
            actions.append(Link(source, tgt_found[-1]))
        if len(src_found) > 1 or len(tgt_found) > 1:
            diag.note(ParseRecord(sentence, raw, "ambiguous", f"{len(src_found)}x{max(len(tgt_found), 1)} matches"))
        else:
            diag.note(ParseRecord(sentence, raw, "ok"))
    actions.append(Shift())
    return actions, diag
