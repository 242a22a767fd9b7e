"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 predictor or
transport error.  Logs go to stderr; each run ends with one ``key=value``
summary line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import shlex
import sys
import time
from contextlib import ExitStack
from typing import Optional, Sequence

from . import conll
from .codec import INFERENCE_INPUT_BUDGET, OUTPUT_BUDGET, TRAINING_INPUT_BUDGET, EncodeOptions, EncodingError
from .document import Clustering, Document, DocumentError
from .metrics import SingletonMode, Singletons
from .oracle import OracleError, expected_final, oracle_run, replay
from .predictor import PredictorConfig, PredictorError, RecordingPredictor, make_predictor
from .runner import ScoringError, export_training, infer, score, write_examples
from .transitions import SystemKind, TransitionError

log = logging.getLogger("seqcoref")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PREDICTOR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _add_encoding_flags(p: argparse.ArgumentParser, input_budget: int) -> None:
    p.add_argument("--input-budget", type=int, default=input_budget, help=f"input token budget (default {input_budget})")
    p.add_argument("--output-budget", type=int, default=OUTPUT_BUDGET, help=f"output token budget (default {OUTPUT_BUDGET})")
    p.add_argument("--no-context-fill", action="store_true", help="do not add sentences after the focus sentence")
    p.add_argument("--no-speaker", action="store_true", help="leave out speaker tags")
    p.add_argument("--no-genre", action="store_true", help="leave out the genre tag")


def _add_system(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", type=SystemKind, choices=list(SystemKind), default=SystemKind.LINK_APPEND,
                   metavar="{" + ",".join(s.value for s in SystemKind) + "}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqcoref", description="Transition-based seq2seq coreference toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--speaker-column", type=int, default=conll.SPEAKER_COLUMN)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("export", help="write oracle input/target pairs as JSON lines")
    _add_system(p)
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="CoNLL files or directories")
    p.add_argument("--out", default="-", help="output JSONL file (default stdout)")
    _add_encoding_flags(p, TRAINING_INPUT_BUDGET)

    p = sub.add_parser("infer", help="predict clusterings sentence by sentence")
    _add_system(p)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True, help="predicted CoNLL file")
    p.add_argument("--summary", help="JSON run summary file")
    p.add_argument("--predictor", choices=["oracle", "replay", "subprocess", "http"], default="oracle")
    p.add_argument("--command", help="predictor command line, shell-quoted (subprocess)")
    p.add_argument("--endpoint", help="predictor URL (http)")
    p.add_argument("--trace", help="recorded trace to replay")
    p.add_argument("--record", help="append every exchange to this trace file")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="documents processed in parallel")
    _add_encoding_flags(p, INFERENCE_INPUT_BUDGET)

    p = sub.add_parser("score", help="MUC, B3, CEAF_phi4 and their average")
    p.add_argument("--gold", nargs="+", required=True)
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--pred-singletons", type=Singletons, choices=list(Singletons), default=Singletons.INCLUDE,
                   metavar="{include,exclude}")
    p.add_argument("--eval-singletons", type=Singletons, choices=list(Singletons), default=Singletons.INCLUDE,
                   metavar="{include,exclude}")
    p.add_argument("--format", choices=["table", "kv"], default="table")
    p.add_argument("--allow-missing", action="store_true",
                   help="score only the gold documents present in the predictions")

    p = sub.add_parser("oracle-check", help="check that oracle replay reconstructs gold")
    p.add_argument("--system", type=SystemKind, choices=list(SystemKind), action="append",
                   metavar="{" + ",".join(s.value for s in SystemKind) + "}",
                   help="system to check (repeatable; default all three)")
    p.add_argument("--in", dest="inputs", nargs="*", default=[])
    p.add_argument("--random", type=int, default=0, help="also check this many random documents")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _read(paths: Sequence[str], speaker_column: int) -> list[conll.CorpusEntry]:
    entries = []
    for path in paths:
        entries.extend(conll.read_corpus(path, speaker_column))
    return entries


def _options(args, system: SystemKind) -> EncodeOptions:
    return EncodeOptions(
        input_budget=args.input_budget,
        output_budget=args.output_budget,
        annotate_clusters=system is not SystemKind.LINK_ONLY,
        fill_context=not args.no_context_fill,
        include_speaker=not args.no_speaker,
        include_genre=not args.no_genre,
    )


def _open_out(path: str, stack: ExitStack):
    if path == "-":
        return sys.stdout
    return stack.enter_context(open(path, "w", encoding="utf-8", newline="\n"))


def cmd_export(args) -> int:
    entries = _read(args.inputs, args.speaker_column)
    opts = _options(args, args.system)
    failed: list = []
    started = time.perf_counter()
    with ExitStack() as stack:
        n = write_examples(export_training(entries, args.system, opts, failed=failed), _open_out(args.out, stack))
    print(f"command=export system={args.system.value} documents={len(entries)} failed={len(failed)} "
          f"examples={n} wall_time={time.perf_counter() - started:.3f}", file=sys.stderr)
    return EXIT_DATA if failed else EXIT_OK


def cmd_infer(args) -> int:
    entries = _read(args.inputs, args.speaker_column)
    opts = _options(args, args.system)
    config = PredictorConfig.from_env(
        kind=args.predictor,
        endpoint=args.endpoint,
        command=tuple(shlex.split(args.command or "")),
        trace=args.trace,
        timeout=args.timeout,
        retries=args.retries,
        concurrency=args.jobs,
    )
    gold = {e.key: e.gold for e in entries}
    with ExitStack() as stack:
        try:
            predictor = make_predictor(config, args.system, gold, opts.fingerprint())
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if hasattr(predictor, "close"):
            stack.callback(predictor.close)
        if args.record:
            sink = stack.enter_context(open(args.record, "a", encoding="utf-8"))
            predictor = RecordingPredictor(predictor, sink, opts.fingerprint())
        predictions, summary = infer(entries, predictor, args.system, opts, jobs=args.jobs)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        for e in entries:
            if e.key in predictions:
                conll.write_conll(e.document, predictions[e.key], f, e.part)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as f:
            json.dump({"system": args.system.value, **summary.to_json()}, f, indent=2)
    for key, reason in summary.failed:
        print(f"failed: {key}: {reason}", file=sys.stderr)
    print(f"command=infer system={args.system.value} {summary.line()}", file=sys.stderr)
    if any(reason.startswith("PredictorError") for _, reason in summary.failed):
        return EXIT_PREDICTOR
    return EXIT_DATA if summary.failed else EXIT_OK


def cmd_score(args) -> int:
    gold = _read(args.gold, args.speaker_column)
    pred = {e.key: e.gold for e in _read(args.pred, args.speaker_column)}
    excluded = [e.key for e in gold if e.key not in pred] if args.allow_missing else []
    mode = SingletonMode(args.pred_singletons, args.eval_singletons)
    result = score(gold, pred, mode, excluded)
    if args.format == "table":
        print(result.table())
    else:
        print(result.overall.key_values())
        for label, (n, report) in result.buckets.items():
            avg = f"{report.avg_f1:.6f}" if report is not None else "nan"
            print(f"bucket={label} docs={n} avg_f1={avg}")
    print(f"command=score documents={len(result.documents)} excluded={len(excluded)} "
          f"{result.overall.key_values()}", file=sys.stderr)
    return EXIT_OK


def random_entry(rng: random.Random, n: int) -> conll.CorpusEntry:
    """A small random document with a random gold clustering."""
    vocab = ["a", "b", "c", "the", "dog", "he", "it", "saw"]
    sentences = [[rng.choice(vocab) for _ in range(rng.randint(1, 6))] for _ in range(rng.randint(1, 5))]
    doc = Document.from_sentences(f"random/{n}", sentences, [rng.choice(["A", "B"]) for _ in sentences])
    spans = []
    for i in range(1, doc.num_sentences + 1):
        first, last = doc.sentence_bounds(i)
        for a in range(first, last + 1):
            for b in range(a, last + 1):
                if rng.random() < 0.25:
                    spans.append((a, b))
    rng.shuffle(spans)
    clusters: list[list] = []
    for m in spans:
        if clusters and rng.random() < 0.6:
            rng.choice(clusters).append(m)
        else:
            clusters.append([m])
    return conll.CorpusEntry(doc, Clustering.of(*clusters))


def cmd_oracle_check(args) -> int:
    systems = args.system or list(SystemKind)
    entries = _read(args.inputs, args.speaker_column)
    rng = random.Random(args.seed)
    entries += [random_entry(rng, n) for n in range(args.random)]
    if not entries:
        raise UsageError("oracle-check needs --in files or --random N")
    started = time.perf_counter()
    failures = 0
    for system in systems:
        for entry in entries:
            final = replay(system, entry.document, oracle_run(system, entry.document, entry.gold)).clustering
            ok = final.as_partition() == expected_final(system, entry.gold).as_partition()
            failures += not ok
            print(f"{system.value}\t{entry.key}\t{'pass' if ok else 'FAIL'}")
    if failures:
        print(f"{failures} document check(s): gold NOT reconstructed")
    else:
        print("all documents: exact gold reconstruction")
    print(f"command=oracle-check systems={len(systems)} documents={len(entries)} failures={failures} "
          f"wall_time={time.perf_counter() - started:.3f}", file=sys.stderr)
    return EXIT_DATA if failures else EXIT_OK


COMMANDS = {"export": cmd_export, "infer": cmd_infer, "score": cmd_score, "oracle-check": cmd_oracle_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PredictorError as exc:
        print(f"predictor error: {exc}", file=sys.stderr)
        return EXIT_PREDICTOR
    except (OSError, conll.ConllError, DocumentError, OracleError, EncodingError, TransitionError, ScoringError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
