"""MUC, B-cubed and CEAF-phi4 together with their CoNLL average.

Each metric is computed as numerator/denominator pairs so that corpus scores
can be micro-averaged: counts are summed over documents before dividing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .document import Clustering

Clusters = Sequence[frozenset]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision, recall, f1)


@dataclass
class Counts:
    """Precision and recall as unreduced fractions."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.p_num + other.p_num,
            self.p_den + other.p_den,
            self.r_num + other.r_num,
            self.r_den + other.r_den,
        )

    def prf(self) -> PRF:
        p = self.p_num / self.p_den if self.p_den else 0.0
        r = self.r_num / self.r_den if self.r_den else 0.0
        return PRF.from_pr(p, r)


def _clusters(k) -> list[frozenset]:
    return [frozenset(c) for c in k]


def _muc_side(keys: Clusters, responses: Clusters) -> tuple[float, float]:
    owner = {}
    for n, c in enumerate(responses):
        for m in c:
            owner[m] = n
    num = den = 0
    for c in keys:
        # mentions missing from the other side form their own partition cells
        cells = {owner.get(m, ("missing", m)) for m in c}
        num += len(c) - len(cells)
        den += len(c) - 1
    return num, den


def muc_counts(gold, pred) -> Counts:
    g, p = _clusters(gold), _clusters(pred)
    r_num, r_den = _muc_side(g, p)
    p_num, p_den = _muc_side(p, g)
    return Counts(p_num, p_den, r_num, r_den)


def _b3_side(keys: Clusters, responses: Clusters) -> tuple[float, float]:
    owner = {}
    for n, c in enumerate(responses):
        for m in c:
            owner[m] = n
    num = 0.0
    den = 0
    for c in keys:
        overlap: dict[int, int] = {}
        for m in c:
            if m in owner:
                overlap[owner[m]] = overlap.get(owner[m], 0) + 1
        num += sum(n * n for n in overlap.values()) / len(c)
        den += len(c)
    return num, den


def b_cubed_counts(gold, pred) -> Counts:
    g, p = _clusters(gold), _clusters(pred)
    r_num, r_den = _b3_side(g, p)
    p_num, p_den = _b3_side(p, g)
    return Counts(p_num, p_den, r_num, r_den)


def phi4(a: frozenset, b: frozenset) -> float:
    return 2 * len(a & b) / (len(a) + len(b))


def similarity_matrix(gold, pred) -> np.ndarray:
    g, p = _clusters(gold), _clusters(pred)
    sim = np.zeros((len(g), len(p)))
    for i, a in enumerate(g):
        for j, b in enumerate(p):
            if a & b:
                sim[i, j] = phi4(a, b)
    return sim


def best_alignment(sim: np.ndarray) -> float:
    """Total similarity of the optimal one-to-one cluster alignment."""
    if sim.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(sim, maximize=True)
    return float(sim[rows, cols].sum())


def ceaf_phi4_counts(gold, pred) -> Counts:
    g, p = _clusters(gold), _clusters(pred)
    total = best_alignment(similarity_matrix(g, p))
    return Counts(total, len(p), total, len(g))


def muc(gold, pred) -> PRF:
    return muc_counts(gold, pred).prf()


def b_cubed(gold, pred) -> PRF:
    return b_cubed_counts(gold, pred).prf()


def ceaf_phi4(gold, pred) -> PRF:
    return ceaf_phi4_counts(gold, pred).prf()


class Singletons(str, enum.Enum):
    INCLUDE = "include"
    EXCLUDE = "exclude"

    @property
    def flag(self) -> str:
        return "Y" if self is Singletons.INCLUDE else "N"


@dataclass(frozen=True)
class SingletonMode:
    """Whether singletons are kept on the prediction and evaluation side."""

    prediction: Singletons = Singletons.INCLUDE
    evaluation: Singletons = Singletons.INCLUDE

    @classmethod
    def parse(cls, pe: str) -> "SingletonMode":
        """From a two-letter code such as ``"NY"`` (prediction, evaluation)."""
        flags = {"Y": Singletons.INCLUDE, "N": Singletons.EXCLUDE}
        return cls(flags[pe[0].upper()], flags[pe[1].upper()])

    def __str__(self) -> str:
        return f"P={self.prediction.flag} E={self.evaluation.flag}"

    def prepare(self, gold: Clustering, pred: Clustering) -> tuple[Clustering, Clustering]:
        if self.prediction is Singletons.EXCLUDE:
            pred = pred.without_singletons()
        if self.evaluation is Singletons.EXCLUDE:
            gold = gold.without_singletons()
        return gold, pred


@dataclass
class DocumentCounts:
    muc: Counts = field(default_factory=Counts)
    b3: Counts = field(default_factory=Counts)
    ceaf4: Counts = field(default_factory=Counts)

    def __add__(self, other: "DocumentCounts") -> "DocumentCounts":
        return DocumentCounts(self.muc + other.muc, self.b3 + other.b3, self.ceaf4 + other.ceaf4)


@dataclass(frozen=True)
class ScoreReport:
    muc: PRF
    b3: PRF
    ceaf4: PRF
    mode: SingletonMode = SingletonMode()

    @property
    def avg_f1(self) -> float:
        return (self.muc.f1 + self.b3.f1 + self.ceaf4.f1) / 3

    @classmethod
    def from_counts(cls, counts: DocumentCounts, mode: SingletonMode) -> "ScoreReport":
        return cls(counts.muc.prf(), counts.b3.prf(), counts.ceaf4.prf(), mode)

    def table(self, title: str = "") -> str:
        head = f"{'':<14}{'MUC':^21}|{'B3':^21}|{'CEAF_phi4':^21}|{'Avg.':^7}"
        sub = f"{'':<14}" + "|".join(f"{'P':>7}{'R':>7}{'F1':>7}" for _ in range(3)) + f"|{'F1':>7}"
        cells = "|".join(
            f"{100 * m.precision:7.2f}{100 * m.recall:7.2f}{100 * m.f1:7.2f}"
            for m in (self.muc, self.b3, self.ceaf4)
        )
        row = f"{(title or str(self.mode)):<14}{cells}|{100 * self.avg_f1:7.2f}"
        return "\n".join([head, sub, row])

    def key_values(self, prefix: str = "") -> str:
        fields = [f"{prefix}mode={self.mode.prediction.flag}{self.mode.evaluation.flag}"]
        for name, m in (("muc", self.muc), ("b3", self.b3), ("ceaf4", self.ceaf4)):
            fields += [
                f"{prefix}{name}_p={m.precision:.6f}",
                f"{prefix}{name}_r={m.recall:.6f}",
                f"{prefix}{name}_f1={m.f1:.6f}",
            ]
        fields.append(f"{prefix}avg_f1={self.avg_f1:.6f}")
        return " ".join(fields)


def document_counts(gold: Clustering, pred: Clustering, mode: SingletonMode = SingletonMode()) -> DocumentCounts:
    gold, pred = mode.prepare(gold, pred)
    return DocumentCounts(muc_counts(gold, pred), b_cubed_counts(gold, pred), ceaf_phi4_counts(gold, pred))


def conll_score(gold: Clustering, pred: Clustering, mode: SingletonMode = SingletonMode()) -> ScoreReport:
    return ScoreReport.from_counts(document_counts(gold, pred, mode), mode)


def corpus_score(pairs: Iterable[tuple[Clustering, Clustering]], mode: SingletonMode = SingletonMode()) -> ScoreReport:
    """Micro-averaged score over (gold, pred) document pairs."""
    total = DocumentCounts()
    for gold, pred in pairs:
        total = total + document_counts(gold, pred, mode)
    return ScoreReport.from_counts(total, mode)

