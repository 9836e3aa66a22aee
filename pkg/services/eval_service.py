# services/eval_service.py

import logging
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix
from tabulate import tabulate

from services.chunk_service import ChunkConfig, split
from services.codec_service import LabeledSequence
from services.errors import ChunkPunctError, ConfigError, LengthMismatch, SweepError, WordMismatch
from services.merge_service import MergeConfig, merge

logger = logging.getLogger(__name__)

# unified slot symbols; "$" is the blank punctuation slot
SYMBOLS = ("U", "L", ".", ",", "?", "$")
CLASS_NAMES = {"U": "U", "L": "L", ".": "FullStop", ",": "Comma", "?": "Question", "$": "None"}
PUNCT_CLASSES = (".", ",", "?")
# classes shown by compare() unless all_classes is set
COMPARE_CLASSES = ("U", ".", ",", "?")


# ==========================================================
# UNIFY
# ==========================================================
def unify(seq: LabeledSequence) -> list[str]:
    """Case slot then punctuation slot for every token."""
    out = []
    for token in seq:
        out.append(token.case.value)
        out.append(token.punct.value)
    return out


# ==========================================================
# CONFUSION MATRIX
# ==========================================================
@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are reference symbols, columns are hypothesis symbols (SYMBOLS order)."""

    counts: np.ndarray

    @classmethod
    def zeros(cls) -> "ConfusionMatrix":
        return cls(np.zeros((len(SYMBOLS), len(SYMBOLS)), dtype=np.int64))

    @classmethod
    def from_symbols(cls, ref: list[str], hyp: list[str]) -> "ConfusionMatrix":
        if not ref:
            return cls.zeros()
        return cls(confusion_matrix(ref, hyp, labels=list(SYMBOLS)).astype(np.int64))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def transpose(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts.T.copy())

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def row_normalized(self) -> pd.DataFrame:
        rows = self.counts.sum(axis=1, keepdims=True)
        normalized = np.divide(self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)
        return pd.DataFrame(normalized, index=list(SYMBOLS), columns=list(SYMBOLS))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.counts, index=list(SYMBOLS), columns=list(SYMBOLS))


# ==========================================================
# METRICS
# ==========================================================
def _prf(tp, predicted, actual):
    precision = tp / predicted if predicted > 0 else 0.0
    recall = tp / actual if actual > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    classes: dict[str, ClassMetrics]
    confusion: ConfusionMatrix | None = None

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix) -> "MetricsReport":
        counts = cm.counts
        tp = np.diag(counts)
        predicted = counts.sum(axis=0)
        actual = counts.sum(axis=1)

        classes = {}
        for i, symbol in enumerate(SYMBOLS):
            p, r, f = _prf(int(tp[i]), int(predicted[i]), int(actual[i]))
            classes[symbol] = ClassMetrics(p, r, f, int(actual[i]))
        return cls(classes, cm)

    @property
    def macro_f1(self) -> float:
        return float(np.mean([m.f1 for m in self.classes.values()])) if self.classes else 0.0

    def micro(self, symbols: Iterable[str] = PUNCT_CLASSES) -> ClassMetrics:
        """Pooled one-vs-rest counts over a subset of classes."""
        if self.confusion is None:
            raise ValueError("micro averages need the confusion counts")
        idx = [SYMBOLS.index(s) for s in symbols]
        counts = self.confusion.counts
        tp = int(sum(counts[i, i] for i in idx))
        predicted = int(counts[:, idx].sum())
        actual = int(counts[idx, :].sum())
        return ClassMetrics(*_prf(tp, predicted, actual), actual)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"class": s, "name": CLASS_NAMES.get(s, s), "precision": m.precision,
             "recall": m.recall, "f1": m.f1, "support": m.support}
            for s, m in self.classes.items()
        ]
        return pd.DataFrame(rows, columns=["class", "name", "precision", "recall", "f1", "support"])

    def to_json(self) -> dict:
        data = {
            "classes": {
                CLASS_NAMES.get(s, s): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for s, m in self.classes.items()
            },
            "macro_f1": self.macro_f1,
        }
        if self.confusion is not None:
            data["labels"] = [CLASS_NAMES[s] for s in SYMBOLS]
            data["confusion"] = self.confusion.counts.tolist()
            data["confusion_row_normalized"] = self.confusion.row_normalized().round(6).values.tolist()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "MetricsReport":
        by_name = {name: symbol for symbol, name in CLASS_NAMES.items()}
        classes = {}
        for name, values in data.get("classes", {}).items():
            symbol = by_name.get(name, name)
            classes[symbol] = ClassMetrics(
                float(values["precision"]),
                float(values["recall"]),
                float(values["f1"]),
                int(values.get("support", 0)),
            )
        ordered = {s: classes[s] for s in SYMBOLS if s in classes}
        confusion = None
        if "confusion" in data:
            confusion = ConfusionMatrix(np.asarray(data["confusion"], dtype=np.int64))
        return cls(ordered, confusion)


# ==========================================================
# SCORE
# ==========================================================
def score_counts(ref: LabeledSequence, hyp: LabeledSequence) -> ConfusionMatrix:
    if len(ref) != len(hyp):
        raise LengthMismatch(len(ref), len(hyp), "reference vs hypothesis")
    for i, (r, h) in enumerate(zip(ref, hyp)):
        if r.word != h.word:
            raise WordMismatch(i, r.word, h.word)
    return ConfusionMatrix.from_symbols(unify(ref), unify(hyp))


def score(ref: LabeledSequence, hyp: LabeledSequence) -> tuple[MetricsReport, ConfusionMatrix]:
    cm = score_counts(ref, hyp)
    return MetricsReport.from_confusion(cm), cm


def score_corpus(pairs: Iterable[tuple[LabeledSequence, LabeledSequence]]) -> MetricsReport:
    """Micro-averaged: count matrices are summed before any ratio is taken."""
    total = ConfusionMatrix.zeros()
    for ref, hyp in pairs:
        total = total + score_counts(ref, hyp)
    return MetricsReport.from_confusion(total)


# ==========================================================
# SWEEP
# ==========================================================
@dataclass(frozen=True)
class SweepReport:
    entries: list[tuple[int, MetricsReport]]

    def to_frame(self) -> pd.DataFrame:
        """Long format (m, class, precision, recall, f1), ready to plot."""
        rows = []
        for m, report in self.entries:
            for symbol, metrics in report.classes.items():
                rows.append({
                    "m": m,
                    "class": symbol,
                    "precision": metrics.precision,
                    "recall": metrics.recall,
                    "f1": metrics.f1,
                })
        return pd.DataFrame(rows, columns=["m", "class", "precision", "recall", "f1"])

    def f1(self, symbol: str) -> list[float]:
        return [report.classes[symbol].f1 for _, report in self.entries]


def sweep(
    references: list[LabeledSequence],
    model,
    cfg: ChunkConfig,
    m_values: Iterable[int],
    progress=None,
) -> SweepReport:
    """
    For each min_words_cut value: split, restore, merge, score, pooled over
    every document. Chunk restoration does not depend on m, so each document
    is restored once and re-merged per value.
    """
    m_values = sorted(set(m_values))
    for m in m_values:
        if not 0 <= m <= cfg.overlap:
            raise ConfigError(f"min_words_cut={m} outside [0, overlap={cfg.overlap}]")
    if not m_values:
        return SweepReport([])

    restored = []
    for doc, reference in enumerate(references):
        chunks = split([t.word for t in reference], cfg, doc)
        try:
            results = list(zip(chunks, model.restore_batch(chunks)))
        except ChunkPunctError as e:
            raise SweepError(m_values[0], doc, e)
        restored.append(results)

    entries = []
    for m in (progress(m_values) if progress else m_values):
        mcfg = MergeConfig(min_words_cut=m)
        total = ConfusionMatrix.zeros()
        for doc, (reference, results) in enumerate(zip(references, restored)):
            try:
                total = total + score_counts(reference, merge(results, cfg, mcfg))
            except ChunkPunctError as e:
                raise SweepError(m, doc, e)
        entries.append((m, MetricsReport.from_confusion(total)))
        logger.debug("sweep m=%d punctuation micro-F1=%.4f", m, entries[-1][1].micro().f1)

    return SweepReport(entries)


# ==========================================================
# COMPARE
# ==========================================================
def compare(report_a: MetricsReport, report_b: MetricsReport, all_classes: bool = False) -> pd.DataFrame:
    """Per-class a - b deltas of precision, recall and F1."""
    shown = SYMBOLS if all_classes else COMPARE_CLASSES
    rows = []
    for symbol in shown:
        if symbol not in report_a.classes or symbol not in report_b.classes:
            continue
        a, b = report_a.classes[symbol], report_b.classes[symbol]
        rows.append({
            "class": symbol,
            "precision": a.precision,
            "recall": a.recall,
            "f1": a.f1,
            "d_precision": a.precision - b.precision,
            "d_recall": a.recall - b.recall,
            "d_f1": a.f1 - b.f1,
        })
    return pd.DataFrame(rows, columns=["class", "precision", "recall", "f1", "d_precision", "d_recall", "d_f1"])


def format_compare(deltas: pd.DataFrame, label_a: str = "A", label_b: str = "B") -> str:
    table = [
        [
            row["class"],
            f"{row['precision']:.2f}",
            f"{row['recall']:.2f}",
            f"{row['f1']:.2f}",
            f"{row['d_precision']:+.2f}",
            f"{row['d_recall']:+.2f}",
            f"{row['d_f1']:+.2f}",
        ]
        for _, row in deltas.iterrows()
    ]
    headers = ["Class", "Precision", "Recall", "F1-score", "dP", "dR", "dF1"]
    title = f"{label_a} vs {label_b}"
    return title + "\n" + tabulate(table, headers=headers, colalign=("right",) * len(headers))


def format_report(report: MetricsReport) -> str:
    table = [
        [s, CLASS_NAMES.get(s, s), f"{m.precision:.4f}", f"{m.recall:.4f}", f"{m.f1:.4f}", m.support]
        for s, m in report.classes.items()
    ]
    return tabulate(table, headers=["Class", "Name", "Precision", "Recall", "F1-score", "Support"])
