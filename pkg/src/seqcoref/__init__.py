"""Sentence-at-a-time transition systems for seq2seq coreference resolution."""

from .codec import EncodeOptions, encode_actions, encode_input, parse_actions, serialize_mention
from .conll import CorpusEntry, filter_singletons, read_conll, write_conll
from .document import Clustering, Document, Span, mention_order, potential_mentions
from .metrics import PRF, ScoreReport, SingletonMode, b_cubed, ceaf_phi4, conll_score, muc
from .oracle import OracleStep, oracle_actions, oracle_run
from .transitions import AddMention, Append, Link, Shift, State, SystemKind, apply, is_allowed, run_episode

__version__ = "0.1.0"

__all__ = [
    "AddMention",
    "Append",
    "apply",
    "b_cubed",
    "ceaf_phi4",
    "Clustering",
    "conll_score",
    "CorpusEntry",
    "Document",
    "encode_actions",
    "encode_input",
    "EncodeOptions",
    "filter_singletons",
    "is_allowed",
    "Link",
    "mention_order",
    "muc",
    "oracle_actions",
    "oracle_run",
    "OracleStep",
    "parse_actions",
    "potential_mentions",
    "PRF",
    "read_conll",
    "run_episode",
    "ScoreReport",
    "serialize_mention",
    "Shift",
    "SingletonMode",
    "Span",
    "State",
    "SystemKind",
    "write_conll",
]
