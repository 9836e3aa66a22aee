# services/model_service.py

import logging
import os
import subprocess
from abc import ABC, abstractmethod
from collections import Counter, defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from services.chunk_service import Chunk, ChunkConfig, split
from services.codec_service import (
    ENCODED,
    PLAIN,
    CaseLabel,
    LabeledSequence,
    PunctLabel,
    Token,
    decode,
    parse_plain,
    read_sequence,
)
from services.errors import ChunkPunctError, ExternalModelError, ModelError
from services.merge_service import align

logger = logging.getLogger(__name__)

FORMAT_ENV = "CHUNKPUNCT_MODEL_FORMAT"

# tie order for punctuation argmax: earlier wins
PUNCT_PRIORITY = (PunctLabel.NONE, PunctLabel.FULL_STOP, PunctLabel.COMMA, PunctLabel.QUESTION)


# ==========================================================
# MODEL SELECTION
# ==========================================================
class RestorerSpec(BaseModel):
    """Which model restores chunks, with the parameters of that kind."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["oracle", "noise", "baseline", "external"] = "oracle"

    # noise
    width: int = Field(3, ge=0)
    case_width: int | None = Field(None, ge=0)
    prob: float = Field(1.0, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0)

    # baseline
    table: Path | None = None
    case_context: bool = False

    # external
    command: tuple[str, ...] = ()
    fmt: Literal["plain", "encoded"] = PLAIN
    batch_size: int = Field(64, ge=1)
    timeout: float = Field(60.0, gt=0)

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "external" and not self.command:
            raise ValueError("external model needs a command")
        return self


# ==========================================================
# RESTORERS
# ==========================================================
class Restorer(ABC):
    """Lowercase unpunctuated chunk in, restored chunk out. Read-only after construction."""

    @abstractmethod
    def restore_chunk(self, chunk: Chunk) -> LabeledSequence:
        ...

    def restore_batch(self, chunks: list[Chunk]) -> list[LabeledSequence]:
        return [self.restore_chunk(c) for c in chunks]


def restore_chunk(model: Restorer, chunk: Chunk) -> LabeledSequence:
    if not chunk.words:
        raise ValueError("cannot restore an empty chunk")
    return model.restore_chunk(chunk)


class OracleRestorer(Restorer):
    """Returns the reference labels of each chunk, keyed by (doc, chunk index)."""

    def __init__(self, references: dict[tuple[int, int], LabeledSequence]):
        self.references = references

    @classmethod
    def from_documents(cls, documents: list[LabeledSequence], cfg: ChunkConfig) -> "OracleRestorer":
        references = {}
        for doc, reference in enumerate(documents):
            for chunk in split([t.word for t in reference], cfg, doc):
                references[(doc, chunk.index)] = reference[chunk.start:chunk.end]
        return cls(references)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], fmt: str = PLAIN, doc: int = 0) -> "OracleRestorer":
        references = {}
        for index, (source, target) in enumerate(pairs):
            references[(doc, index)] = read_sequence(target, fmt, source.split())
        return cls(references)

    def restore_chunk(self, chunk: Chunk) -> LabeledSequence:
        reference = self.references.get((chunk.doc, chunk.index))
        if reference is None:
            raise ModelError(f"no reference for document {chunk.doc}, chunk {chunk.index}")
        if [t.word for t in reference] != list(chunk.words):
            raise ModelError(f"reference words differ from chunk {chunk.index} of document {chunk.doc}")
        return list(reference)


def corrupt_boundary(
    reference: LabeledSequence,
    chunk_length: int,
    b: int,
    p: float,
    seed: int,
    chunk_index: int = 0,
    doc: int = 0,
    case_width: int | None = None,
) -> LabeledSequence:
    """
    Simulate the chunk-edge weakness of a real model. Within b words of an
    edge, each position (with probability p) loses its punctuation; within
    case_width words (default ceil(b / 2)) a restored capital is also lost.
    The draw for a position depends only on (seed, doc, chunk_index, position).
    """
    if case_width is None:
        case_width = (b + 1) // 2
    if p <= 0 or (b == 0 and case_width == 0):
        return list(reference)

    draws = np.random.default_rng([seed, doc, chunk_index]).random(chunk_length)

    corrupted = []
    for i, token in enumerate(reference):
        near = i < b or i >= chunk_length - b
        near_case = i < case_width or i >= chunk_length - case_width
        if (near or near_case) and draws[i] < p:
            case = CaseLabel.L if near_case else token.case
            punct = PunctLabel.NONE if near else token.punct
            token = Token(token.word, case, punct)
        corrupted.append(token)
    return corrupted


class BoundaryNoiseRestorer(Restorer):
    def __init__(self, oracle: OracleRestorer, width: int, prob: float, seed: int = 0, case_width: int | None = None):
        self.oracle = oracle
        self.width = width
        self.prob = prob
        self.seed = seed
        self.case_width = case_width

    def restore_chunk(self, chunk: Chunk) -> LabeledSequence:
        reference = self.oracle.restore_chunk(chunk)
        return corrupt_boundary(
            reference, len(chunk), self.width, self.prob, self.seed,
            chunk_index=chunk.index, doc=chunk.doc, case_width=self.case_width,
        )


# ==========================================================
# BASELINE (frequency tables)
# ==========================================================
def _counter_table():
    return defaultdict(Counter)


@dataclass
class BaselineTable:
    """
    Count tables for the frequency baseline.
    Case is U iff the word was seen as U more often than as L. With
    contextual=True it first consults the left bigram (or the chunk-initial
    table) and backs off to the word's own counts. Punctuation looks at the
    right bigram, or at the chunk-final table for the last word.
    """

    case_freq: dict = field(default_factory=_counter_table)
    case_bigram: dict = field(default_factory=_counter_table)
    case_initial: dict = field(default_factory=_counter_table)
    punct_bigram: dict = field(default_factory=_counter_table)
    punct_final: dict = field(default_factory=_counter_table)

    def update(self, seq: LabeledSequence):
        for i, token in enumerate(seq):
            self.case_freq[token.word][token.case] += 1
            if i == 0:
                self.case_initial[token.word][token.case] += 1
            else:
                self.case_bigram[(seq[i - 1].word, token.word)][token.case] += 1

            if i + 1 < len(seq):
                self.punct_bigram[(token.word, seq[i + 1].word)][token.punct] += 1
            else:
                self.punct_final[token.word][token.punct] += 1

    def _case(self, words: list[str], i: int, contextual: bool) -> CaseLabel:
        tables = [self.case_freq.get(words[i])]
        if contextual:
            left = self.case_initial.get(words[i]) if i == 0 else self.case_bigram.get((words[i - 1], words[i]))
            tables.insert(0, left)
        for counts in tables:
            if counts:
                return CaseLabel.U if counts[CaseLabel.U] > counts[CaseLabel.L] else CaseLabel.L
        return CaseLabel.L

    def _punct(self, words: list[str], i: int) -> PunctLabel:
        if i + 1 < len(words):
            counts = self.punct_bigram.get((words[i], words[i + 1]))
        else:
            counts = self.punct_final.get(words[i])
        if not counts:
            return PunctLabel.NONE
        return max(PUNCT_PRIORITY, key=lambda p: (counts[p], -PUNCT_PRIORITY.index(p)))

    def predict(self, words: list[str], contextual: bool = False) -> LabeledSequence:
        words = list(words)
        return [Token(w, self._case(words, i, contextual), self._punct(words, i)) for i, w in enumerate(words)]

    def __len__(self):
        return len(self.case_freq)


def train_baseline(pairs: Iterable[tuple[str, str]], fmt: str = PLAIN) -> BaselineTable:
    table = BaselineTable()
    n_pairs = 0
    for source, target in pairs:
        table.update(read_sequence(target, fmt, source.split()))
        n_pairs += 1
    logger.info("trained baseline on %d pairs (%d word types)", n_pairs, len(table))
    return table


class BaselineRestorer(Restorer):
    def __init__(self, table: BaselineTable, contextual: bool = False):
        self.table = table
        self.contextual = contextual

    def restore_chunk(self, chunk: Chunk) -> LabeledSequence:
        return self.table.predict(list(chunk.words), self.contextual)


# ==========================================================
# EXTERNAL (subprocess line protocol)
# ==========================================================
class ExternalRestorer(Restorer):
    """
    Runs the model command once per batch: N chunk lines on stdin, exactly
    N restored lines (plain or encoded) expected on stdout.
    """

    def __init__(self, command: list[str], fmt: str = PLAIN, timeout: float = 60.0):
        self.command = list(command)
        self.fmt = fmt
        self.timeout = timeout

    def restore_chunk(self, chunk: Chunk) -> LabeledSequence:
        return self.restore_batch([chunk])[0]

    def restore_batch(self, chunks: list[Chunk]) -> list[LabeledSequence]:
        if not chunks:
            return []
        first = chunks[0].index
        payload = "".join(" ".join(c.words) + "\n" for c in chunks)
        env = {**os.environ, FORMAT_ENV: self.fmt}

        try:
            proc = subprocess.run(
                self.command,
                input=payload,
                capture_output=True,
                text=True,
                encoding="utf-8",
                timeout=self.timeout,
                env=env,
            )
        except subprocess.TimeoutExpired:
            raise ExternalModelError(first, f"timed out after {self.timeout}s")
        except OSError as e:
            raise ExternalModelError(first, f"cannot start {self.command[0]!r}: {e}")

        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] or [""]
            raise ExternalModelError(first, f"exit status {proc.returncode} {tail[0]}".strip())

        lines = proc.stdout.splitlines()
        if len(lines) < len(chunks):
            raise ExternalModelError(chunks[len(lines)].index, f"short read: {len(lines)} of {len(chunks)} lines")
        if len(lines) > len(chunks):
            raise ExternalModelError(first, f"{len(lines)} output lines for {len(chunks)} chunks")

        restored = []
        for chunk, line in zip(chunks, lines):
            try:
                if self.fmt == ENCODED:
                    restored.append(decode(line, list(chunk.words)))
                else:
                    restored.append(align(list(chunk.words), parse_plain(line)))
            except ChunkPunctError as e:
                raise ExternalModelError(chunk.index, str(e))
        logger.debug("external model restored chunks %d..%d", first, chunks[-1].index)
        return restored


# ==========================================================
# Factory
# ==========================================================
def build_restorer(
    spec: RestorerSpec,
    references: list[LabeledSequence] | None = None,
    cfg: ChunkConfig | None = None,
    table: BaselineTable | None = None,
) -> Restorer:
    if spec.kind in ("oracle", "noise"):
        if references is None or cfg is None:
            raise ModelError(f"{spec.kind} model needs reference documents")
        oracle = OracleRestorer.from_documents(references, cfg)
        if spec.kind == "oracle":
            return oracle
        return BoundaryNoiseRestorer(oracle, spec.width, spec.prob, spec.seed, spec.case_width)

    if spec.kind == "baseline":
        if table is None:
            if spec.table is None:
                raise ModelError("baseline model needs a table")
            from storage.tables import load_table

            table = load_table(spec.table)
        return BaselineRestorer(table, spec.case_context)

    return ExternalRestorer(list(spec.command), spec.fmt, spec.timeout)
