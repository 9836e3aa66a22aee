# services/merge_service.py

import logging
from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict, Field

from services.chunk_service import Chunk, ChunkConfig
from services.codec_service import CaseLabel, LabeledSequence, PunctLabel, Token
from services.errors import ConfigError, LengthMismatch, MissingChunk, OverlapMismatch, WordMismatch

logger = logging.getLogger(__name__)


class MergeConfig(BaseModel):
    """min_words_cut m: how many overlap positions take their labels from the second chunk."""

    model_config = ConfigDict(frozen=True)

    min_words_cut: int = Field(7, ge=0)

    def check(self, cfg: ChunkConfig) -> "MergeConfig":
        if self.min_words_cut > cfg.overlap:
            raise ConfigError(
                f"min_words_cut={self.min_words_cut} exceeds overlap={cfg.overlap}"
            )
        return self


# ==========================================================
# ALIGN (repairs insertions / deletions in free-text model output)
# ==========================================================
def _lcs_matches(a: list[str], b: list[str]) -> dict[int, int]:
    """Map positions of a to positions of b along one longest common subsequence."""
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])

    matches = {}
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            matches[i] = j
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return matches


def align(chunk_words: list[str], output: LabeledSequence) -> LabeledSequence:
    """
    Force a model output onto the chunk's words. Matched words keep the
    model's labels; words the model lost get the case of the nearest matched
    word on their left (L if none) and no punctuation.
    """
    chunk_words = list(chunk_words)
    if len(output) == len(chunk_words) and all(
        t.word == w for t, w in zip(output, chunk_words)
    ):
        return list(output)

    matches = _lcs_matches(chunk_words, [t.word.lower() for t in output])

    aligned = []
    left_case = CaseLabel.L
    for i, word in enumerate(chunk_words):
        if i in matches:
            source = output[matches[i]]
            aligned.append(Token(word, source.case, source.punct))
            left_case = source.case
        else:
            aligned.append(Token(word, left_case, PunctLabel.NONE))

    logger.debug("aligned %d model tokens onto %d words (%d matched)", len(output), len(chunk_words), len(matches))
    return aligned


# ==========================================================
# MERGE
# ==========================================================
def _check_aligned(chunk: Chunk, seq: LabeledSequence):
    if len(seq) != len(chunk):
        raise LengthMismatch(len(chunk), len(seq), f"chunk {chunk.index}")
    for j, (token, word) in enumerate(zip(seq, chunk.words)):
        if token.word != word:
            raise WordMismatch(chunk.start + j, word, token.word)


class StreamMerger:
    """
    Assembles one document from per-chunk results arriving in any order.
    Results are buffered only until the next index in sequence is available;
    every placed chunk is emitted once its successor is known.
    """

    def __init__(self, cfg: ChunkConfig, mcfg: MergeConfig):
        self.cfg = cfg
        self.m = mcfg.check(cfg).min_words_cut
        self._pending: dict[int, tuple[Chunk, LabeledSequence]] = {}
        self._next = 0
        self._held: tuple[Chunk, LabeledSequence] | None = None
        self._left = 0
        self._out: LabeledSequence = []

    def push(self, chunk: Chunk, seq: LabeledSequence):
        _check_aligned(chunk, seq)
        self._pending[chunk.index] = (chunk, seq)
        while self._next in self._pending:
            self._place(*self._pending.pop(self._next))
            self._next += 1

    def _place(self, chunk: Chunk, seq: LabeledSequence):
        if self._held is None:
            if chunk.start != 0:
                raise OverlapMismatch(chunk.start, chunk.index)
            self._held, self._left = (chunk, seq), 0
            return

        prev, prev_seq = self._held
        v = prev.end - chunk.start
        if v != min(self.cfg.overlap, len(chunk)) or chunk.end <= prev.end:
            raise OverlapMismatch(chunk.start, chunk.index)

        offset = len(prev) - v
        for j in range(v):
            if prev.words[offset + j] != chunk.words[j]:
                raise OverlapMismatch(chunk.start + j, chunk.index)

        cut = min(self.m, v)
        self._out.extend(prev_seq[self._left:len(prev) - cut])
        self._held, self._left = (chunk, seq), v - cut

    def finish(self, expected: int | None = None) -> LabeledSequence:
        if self._pending or (expected is not None and self._next < expected):
            raise MissingChunk(self._next)
        if self._held is not None:
            chunk, seq = self._held
            self._out.extend(seq[self._left:])
            self._held = None
        return self._out


def merge(
    results: list[tuple[Chunk, LabeledSequence]],
    cfg: ChunkConfig,
    mcfg: MergeConfig,
) -> LabeledSequence:
    merger = StreamMerger(cfg, mcfg)
    for chunk, seq in results:
        merger.push(chunk, seq)
    return merger.finish(expected=len(results))


def merge_stream(
    results: Iterable[tuple[Chunk, LabeledSequence]],
    cfg: ChunkConfig,
    mcfg: MergeConfig,
    expected: int | None = None,
) -> LabeledSequence:
    merger = StreamMerger(cfg, mcfg)
    for chunk, seq in results:
        merger.push(chunk, seq)
    return merger.finish(expected)
