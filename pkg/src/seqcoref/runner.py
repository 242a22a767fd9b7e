"""End-to-end flows: training-data export, sentence-by-sentence inference, scoring."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Optional, Sequence

from .codec import (
    EncodeOptions,
    EncodingError,
    ParseDiagnostics,
    TokenCounter,
    encode_actions,
    encode_input,
    parse_actions,
)
from .conll import CorpusEntry
from .document import Clustering
from .metrics import DocumentCounts, ScoreReport, SingletonMode, document_counts
from .oracle import OracleError, oracle_run
from .predictor import PredictRequest, Predictor, PredictorError
from .transitions import Shift, State, SystemKind, apply, is_allowed

log = logging.getLogger(__name__)

LENGTH_BUCKETS: tuple[tuple[int, Optional[int]], ...] = (
    (1, 128),
    (129, 256),
    (257, 512),
    (513, 768),
    (769, 1152),
    (1153, None),
)


def bucket_label(lo: int, hi: Optional[int]) -> str:
    return f"{lo}-{hi}" if hi is not None else f"{lo}+"


BUCKET_LABELS = tuple(bucket_label(lo, hi) for lo, hi in LENGTH_BUCKETS)


def length_bucket(n_words: int) -> str:
    for lo, hi in LENGTH_BUCKETS:
        if n_words >= lo and (hi is None or n_words <= hi):
            return bucket_label(lo, hi)
    raise ValueError(f"document length {n_words} is not positive")


# ---------------------------------------------------------------------------
# export


@dataclass(frozen=True)
class TrainingExample:
    doc_key: str
    sentence: int
    input: str
    target: str
    system: SystemKind

    def record(self) -> dict:
        return {"doc_key": self.doc_key, "sentence": self.sentence, "input": self.input, "target": self.target}


def export_document(
    entry: CorpusEntry, system: SystemKind, opts: EncodeOptions, counter: Optional[TokenCounter] = None
) -> list[TrainingExample]:
    examples = []
    for step in oracle_run(system, entry.document, entry.gold):
        text, _ = encode_input(step.state_before, opts, counter)
        target = encode_actions(step.actions, step.state_before)
        examples.append(TrainingExample(entry.key, step.sentence, text, target, system))
    return examples


def export_training(
    corpus: Iterable[CorpusEntry],
    system: SystemKind,
    opts: Optional[EncodeOptions] = None,
    counter: Optional[TokenCounter] = None,
    failed: Optional[list] = None,
) -> Iterator[TrainingExample]:
    """Yield one input/target pair per sentence of every document.

    Documents that cannot be encoded are logged, appended to ``failed`` as
    ``(key, reason)`` and left out.
    """
    opts = opts or EncodeOptions.for_system(system)
    for entry in corpus:
        try:
            examples = export_document(entry, system, opts, counter)
        except (EncodingError, OracleError) as exc:
            log.error("%s: %s", entry.key, exc)
            if failed is not None:
                failed.append((entry.key, str(exc)))
            continue
        for ex in examples:
            if counter is None and len(ex.target.split()) > opts.output_budget:
                log.warning("%s sentence %d: target exceeds the output budget", ex.doc_key, ex.sentence)
            yield ex


def write_examples(examples: Iterable[TrainingExample], sink: IO[str]) -> int:
    n = 0
    for ex in examples:
        sink.write(json.dumps(ex.record(), ensure_ascii=False) + "\n")
        n += 1
    return n


# ---------------------------------------------------------------------------
# inference


@dataclass
class DocumentResult:
    key: str
    clustering: Clustering = field(default_factory=Clustering)
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)
    applied: int = 0
    disallowed: int = 0
    error: Optional[str] = None
    states: list[State] = field(default_factory=list)


def infer_document(
    entry: CorpusEntry,
    predictor: Predictor,
    system: SystemKind,
    opts: EncodeOptions,
    counter: Optional[TokenCounter] = None,
    keep_states: bool = False,
) -> DocumentResult:
    result = DocumentResult(entry.key)
    state = State.initial(entry.document)
    try:
        while not state.is_final:
            if keep_states:
                result.states.append(state)
            text, window = encode_input(state, opts, counter)
            output = predictor.predict(
                PredictRequest(text, opts.output_budget, entry.key, state.focus, state=state)
            )
            actions, diag = parse_actions(output, state, window)
            result.diagnostics.merge(diag)
            for action in actions[:-1]:
                if is_allowed(system, state, action):
                    state = apply(state, action, system)
                    result.applied += 1
                else:
                    result.disallowed += 1
            state = apply(state, Shift(), system)
    except (PredictorError, EncodingError) as exc:
        log.error("%s: %s", entry.key, exc)
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    result.clustering = state.clustering
    return result


@dataclass
class RunSummary:
    documents: int = 0
    processed: int = 0
    failed: list[tuple[str, str]] = field(default_factory=list)
    total_actions: int = 0
    applied: int = 0
    disallowed: int = 0
    hallucinations: int = 0
    ambiguous: int = 0
    skipped: int = 0
    implicit_shifts: int = 0
    wall_time: float = 0.0
    bucket_counts: dict[str, int] = field(default_factory=lambda: {b: 0 for b in BUCKET_LABELS})

    def add(self, entry: CorpusEntry, result: DocumentResult) -> None:
        self.documents += 1
        self.bucket_counts[length_bucket(len(entry.document))] += 1
        d = result.diagnostics
        self.total_actions += d.total_actions
        self.hallucinations += d.hallucinations
        self.ambiguous += d.ambiguous
        self.skipped += d.skipped
        self.implicit_shifts += d.implicit_shifts
        self.applied += result.applied
        self.disallowed += result.disallowed
        if result.error is None:
            self.processed += 1
        else:
            self.failed.append((result.key, result.error))

    def to_json(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return (
            f"documents={self.documents} processed={self.processed} failed={len(self.failed)} "
            f"actions={self.total_actions} applied={self.applied} disallowed={self.disallowed} "
            f"hallucinations={self.hallucinations} ambiguous={self.ambiguous} skipped={self.skipped} "
            f"implicit_shifts={self.implicit_shifts} wall_time={self.wall_time:.3f}"
        )


def infer(
    corpus: Sequence[CorpusEntry],
    predictor: Predictor,
    system: SystemKind,
    opts: Optional[EncodeOptions] = None,
    counter: Optional[TokenCounter] = None,
    jobs: int = 1,
) -> tuple[dict[str, Clustering], RunSummary]:
    """Run the predictor sentence by sentence over every document.

    Documents are independent and may run in parallel (``jobs``); within a
    document each request depends on the previous step.  A failing document
    is recorded in the summary and left out of the predictions.
    """
    opts = opts or EncodeOptions.for_system(system, inference=True)
    started = time.perf_counter()

    def run(entry: CorpusEntry) -> DocumentResult:
        return infer_document(entry, predictor, system, opts, counter)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, corpus))
    else:
        results = [run(entry) for entry in corpus]
    summary = RunSummary()
    predictions: dict[str, Clustering] = {}
    for entry, result in zip(corpus, results):
        summary.add(entry, result)
        if result.error is None:
            predictions[entry.key] = result.clustering
    summary.wall_time = time.perf_counter() - started
    return predictions, summary


# ---------------------------------------------------------------------------
# scoring


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class DocumentScore:
    key: str
    length: int
    report: ScoreReport


@dataclass
class CorpusScore:
    overall: ScoreReport
    buckets: dict[str, tuple[int, Optional[ScoreReport]]]
    documents: list[DocumentScore]
    excluded: list[str] = field(default_factory=list)

    def table(self) -> str:
        lines = [self.overall.table("all")]
        lines.append("")
        lines.append(f"{'length':<12}{'docs':>6}{'avg F1':>9}")
        for label, (n, report) in self.buckets.items():
            avg = f"{100 * report.avg_f1:9.2f}" if report is not None else f"{'-':>9}"
            lines.append(f"{label:<12}{n:>6}{avg}")
        if self.excluded:
            lines.append(f"excluded documents: {', '.join(self.excluded)}")
        return "\n".join(lines)


def score(
    gold: Sequence[CorpusEntry],
    predictions: Mapping[str, Clustering],
    mode: SingletonMode = SingletonMode(),
    excluded: Iterable[str] = (),
) -> CorpusScore:
    """Micro-averaged corpus score plus the per-length-bucket breakdown."""
    excluded = list(excluded)
    gold_keys = {e.key for e in gold}
    extra = sorted(set(predictions) - gold_keys)
    missing = sorted(gold_keys - set(predictions) - set(excluded))
    if extra or missing:
        raise ScoringError(f"unmatched documents: missing predictions {missing}, unknown predictions {extra}")
    total = DocumentCounts()
    per_bucket: dict[str, DocumentCounts] = {}
    counts_by_bucket = {b: 0 for b in BUCKET_LABELS}
    documents = []
    for entry in gold:
        if entry.key in excluded:
            continue
        counts = document_counts(entry.gold, predictions[entry.key], mode)
        total = total + counts
        label = length_bucket(len(entry.document))
        per_bucket[label] = per_bucket.get(label, DocumentCounts()) + counts
        counts_by_bucket[label] += 1
        documents.append(DocumentScore(entry.key, len(entry.document), ScoreReport.from_counts(counts, mode)))
    buckets = {
        b: (counts_by_bucket[b], ScoreReport.from_counts(per_bucket[b], mode) if b in per_bucket else None)
        for b in BUCKET_LABELS
    }
    return CorpusScore(ScoreReport.from_counts(total, mode), buckets, documents, excluded)
