# services/chunk_service.py

import math
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator


# ==========================================================
# CONFIG
# ==========================================================
class ChunkConfig(BaseModel):
    """
    Chunk size k and overlap v (in words). The window slides by k - v.
    overlap=None means floor(k / 2); overlap=0 gives plain non-overlapped chunks.
    """

    model_config = ConfigDict(frozen=True)

    chunk_size: int = Field(30, ge=2)
    overlap: int | None = Field(None, validate_default=True)

    @field_validator("overlap", mode="after")
    @classmethod
    def _default_overlap(cls, value, info: ValidationInfo):
        if value is None and "chunk_size" in info.data:
            return info.data["chunk_size"] // 2
        return value

    @model_validator(mode="after")
    def _check_overlap(self):
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError(
                f"overlap must satisfy 0 <= overlap < chunk_size, "
                f"got overlap={self.overlap}, chunk_size={self.chunk_size}"
            )
        return self

    @property
    def stride(self) -> int:
        return self.chunk_size - self.overlap


@dataclass(frozen=True, slots=True)
class Chunk:
    index: int
    start: int
    words: tuple[str, ...]
    doc: int = 0

    @property
    def end(self) -> int:
        return self.start + len(self.words)

    def __len__(self) -> int:
        return len(self.words)


# ==========================================================
# SPLIT
# ==========================================================
def split(words: list[str], cfg: ChunkConfig, doc: int = 0) -> list[Chunk]:
    """
    Window i covers [i*s, i*s + k). Stops as soon as a window reaches the
    end of the input, so the last chunk is always longer than the overlap
    (or is the only chunk).
    """
    n = len(words)
    k, s = cfg.chunk_size, cfg.stride

    chunks = []
    start = 0
    while start < n:
        chunks.append(Chunk(len(chunks), start, tuple(words[start:start + k]), doc))
        if start + k >= n:
            break
        start += s
    return chunks


def expected_chunk_count(n: int, cfg: ChunkConfig) -> int:
    if n == 0:
        return 0
    return max(1, math.ceil((n - cfg.chunk_size) / cfg.stride) + 1)


# ==========================================================
# COVERAGE CHECK
# ==========================================================
@dataclass(frozen=True)
class CoverageReport:
    ok: bool
    kind: str = ""
    start: int = -1
    end: int = -1
    message: str = ""

    def __bool__(self):
        return self.ok


OK = CoverageReport(True)


def _violation(kind, start, end, message):
    return CoverageReport(False, kind, start, end, message)


def coverage_check(chunks: list[Chunk], n: int, cfg: ChunkConfig) -> CoverageReport:
    """Return the first violation of the chunk invariants, or OK."""
    k, s = cfg.chunk_size, cfg.stride

    if not chunks:
        if n > 0:
            return _violation("gap", 0, n, f"no chunks for {n} words")
        return OK

    prev = None
    for chunk in chunks:
        expected_index = 0 if prev is None else prev.index + 1

        if chunk.index > expected_index:
            gap_start = expected_index * s
            gap_end = min(n, (chunk.index - 1) * s + k)
            return _violation(
                "gap", gap_start, gap_end,
                f"chunks {expected_index}..{chunk.index - 1} missing",
            )
        if chunk.index < expected_index:
            return _violation("order", chunk.start, chunk.end, f"chunk {chunk.index} out of order")

        if not 0 < len(chunk) <= k:
            return _violation("length", chunk.start, chunk.end, f"chunk {chunk.index} has {len(chunk)} words")

        if chunk.start != chunk.index * s:
            return _violation(
                "start", chunk.start, chunk.end,
                f"chunk {chunk.index} starts at {chunk.start}, expected {chunk.index * s}",
            )

        if prev is not None:
            shared = prev.end - chunk.start
            if shared != min(cfg.overlap, len(chunk)) or chunk.end <= prev.end:
                return _violation(
                    "overlap", chunk.start, prev.end,
                    f"chunks {prev.index} and {chunk.index} share {shared} words",
                )
            offset = len(prev) - shared
            for j in range(shared):
                if prev.words[offset + j] != chunk.words[j]:
                    pos = chunk.start + j
                    return _violation(
                        "overlap_mismatch", pos, pos + 1,
                        f"{prev.words[offset + j]!r} != {chunk.words[j]!r} at {pos}",
                    )
        prev = chunk

    if prev.end < n:
        return _violation("gap", prev.end, n, f"words {prev.end}..{n - 1} not covered")
    if prev.end > n:
        return _violation("length", n, prev.end, f"chunks cover {prev.end} words, input has {n}")
    return OK
