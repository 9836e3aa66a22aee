# services/pipeline_service.py

import logging
import time
from dataclasses import dataclass

from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from tqdm import tqdm

from services.chunk_service import Chunk, ChunkConfig, expected_chunk_count, split
from services.codec_service import FORMATS, PLAIN, LabeledSequence, write_sequence
from services.corpus_service import clean_text, document_reference, to_asr_input
from services.errors import ConfigError
from services.eval_service import MetricsReport, score_corpus
from services.merge_service import MergeConfig, StreamMerger
from services.model_service import Restorer, RestorerSpec, build_restorer
from storage.files import read_lines, write_json, write_lines

logger = logging.getLogger(__name__)


# ==========================================================
# CONFIG
# ==========================================================
class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    chunk_size: int = Field(30, ge=2)
    overlap: int | None = None
    min_words_cut: int | None = None
    model: RestorerSpec = RestorerSpec()
    input_path: str = "-"
    output_path: str = "-"
    reference_path: str | None = None
    report_path: str | None = None
    fmt: str = PLAIN
    workers: int = Field(1, ge=1)
    batch_size: int = Field(64, ge=1)

    @model_validator(mode="after")
    def _cross_check(self):
        overlap = self.chunk_size // 2 if self.overlap is None else self.overlap
        if not 0 <= overlap < self.chunk_size:
            raise ValueError(f"overlap={overlap} must be >= 0 and < chunk_size={self.chunk_size}")
        m = overlap // 2 if self.min_words_cut is None else self.min_words_cut
        if not 0 <= m <= overlap:
            raise ValueError(f"min_words_cut={m} must be within [0, overlap={overlap}]")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.fmt!r}")
        if self.model.kind in ("oracle", "noise") and self.reference_path is None:
            raise ValueError(f"model {self.model.kind!r} needs a reference file")
        return self

    @property
    def chunk_config(self) -> ChunkConfig:
        return ChunkConfig(chunk_size=self.chunk_size, overlap=self.overlap)

    @property
    def merge_config(self) -> MergeConfig:
        overlap = self.chunk_config.overlap
        m = overlap // 2 if self.min_words_cut is None else self.min_words_cut
        return MergeConfig(min_words_cut=m)


def build_config(cls, **values):
    """Validate a pydantic config, reporting problems as ConfigError."""
    try:
        return cls(**values)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise ConfigError(messages) from e


# ==========================================================
# DOCUMENTS
# ==========================================================
def asr_words(line: str) -> list[str]:
    """Lowercase, unpunctuated word stream of one document line."""
    return [w for s in clean_text(line) for w in to_asr_input(s)]


def reference_documents(lines: list[str]) -> list[LabeledSequence]:
    return [document_reference(clean_text(line)) for line in lines]


def split_documents(documents: list[list[str]], cfg: ChunkConfig) -> list[Chunk]:
    chunks = []
    for doc, words in enumerate(documents):
        chunks.extend(split(words, cfg, doc))
    return chunks


# ==========================================================
# PARALLEL RESTORE + MERGE
# ==========================================================
def _restore_batch(model: Restorer, batch: list[Chunk]):
    return list(zip(batch, model.restore_batch(batch)))


def restore_chunks(
    model: Restorer,
    chunks: list[Chunk],
    workers: int = 1,
    batch_size: int = 64,
):
    """Yield (chunk, restored) pairs as batches finish, in no particular order."""
    batches = [chunks[i:i + batch_size] for i in range(0, len(chunks), batch_size)]
    if not batches:
        return
    parallel = Parallel(n_jobs=workers, prefer="threads", return_as="generator_unordered")
    results = parallel(delayed(_restore_batch)(model, batch) for batch in batches)
    for batch_results in tqdm(results, total=len(batches), desc="restore", unit="batch", disable=None, leave=False):
        yield from batch_results


def restore_documents(
    documents: list[list[str]],
    model: Restorer,
    cfg: ChunkConfig,
    mcfg: MergeConfig,
    workers: int = 1,
    batch_size: int = 64,
) -> list[LabeledSequence]:
    chunks = split_documents(documents, cfg)
    expected = [0] * len(documents)
    for chunk in chunks:
        expected[chunk.doc] += 1

    mergers = [StreamMerger(cfg, mcfg) for _ in documents]
    for chunk, seq in restore_chunks(model, chunks, workers, batch_size):
        mergers[chunk.doc].push(chunk, seq)
    return [merger.finish(n) for merger, n in zip(mergers, expected)]


# ==========================================================
# END TO END
# ==========================================================
@dataclass
class PipelineResult:
    documents: list[LabeledSequence]
    report: MetricsReport | None
    n_chunks: int
    seconds: float


def run_pipeline(cfg: PipelineConfig, table=None) -> PipelineResult:
    """split -> parallel restore -> merge -> (optional) evaluate."""
    started = time.perf_counter()
    chunk_cfg, merge_cfg = cfg.chunk_config, cfg.merge_config

    lines = read_lines(cfg.input_path)
    documents = [asr_words(line) for line in lines]

    references = None
    if cfg.reference_path is not None:
        references = reference_documents(read_lines(cfg.reference_path))
        if len(references) != len(documents):
            raise ConfigError(
                f"reference has {len(references)} documents, input has {len(documents)}"
            )

    model = build_restorer(cfg.model, references=references, cfg=chunk_cfg, table=table)
    batch_size = cfg.model.batch_size if cfg.model.kind == "external" else cfg.batch_size
    restored = restore_documents(documents, model, chunk_cfg, merge_cfg, cfg.workers, batch_size)

    write_lines(cfg.output_path, (write_sequence(seq, cfg.fmt) for seq in restored))

    report = None
    if references is not None:
        report = score_corpus(zip(references, restored))
        if cfg.report_path is not None:
            write_json(cfg.report_path, report.to_json())

    seconds = time.perf_counter() - started
    n_words = sum(len(d) for d in documents)
    n_chunks = sum(expected_chunk_count(len(d), chunk_cfg) for d in documents)
    logger.info(
        "restored %d documents (%d words, %d chunks) with %d workers in %.2fs",
        len(documents), n_words, n_chunks, cfg.workers, seconds,
        extra={"documents": len(documents), "words": n_words, "chunks": n_chunks,
               "workers": cfg.workers, "seconds": round(seconds, 3)},
    )
    return PipelineResult(restored, report, n_chunks, seconds)
