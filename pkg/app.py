import functools
import logging
import shlex
import sys

import click
from tabulate import tabulate
from tqdm import tqdm

from config_manager import configure_logging, load_published_results, load_settings
from services.chunk_service import Chunk, ChunkConfig
from services.codec_service import FORMATS, PLAIN, read_sequence, write_sequence
from services.corpus_service import clean_text, make_pairs, stats
from services.errors import (
    ChunkPunctError,
    ConfigError,
    FileFormatError,
    LengthMismatch,
    MalformedPlainText,
    MissingChunk,
    ModelError,
    OverlapMismatch,
    SweepError,
    UnknownLabel,
    WordMismatch,
)
from services.eval_service import (
    MetricsReport,
    compare,
    format_compare,
    format_report,
    score_corpus,
    sweep,
)
from services.merge_service import MergeConfig, StreamMerger
from services.model_service import RestorerSpec, build_restorer, train_baseline
from services.pipeline_service import (
    PipelineConfig,
    asr_words,
    build_config,
    reference_documents,
    restore_chunks,
    run_pipeline,
    split_documents,
)
from storage.files import (
    read_chunks,
    read_index,
    read_json,
    read_lines,
    read_pairs,
    write_chunks,
    write_json,
    write_lines,
    write_pairs,
)
from storage.tables import save_table

logger = logging.getLogger("chunkpunct")

# ---------------------------------------------------------
# Load settings (CLI defaults)
# ---------------------------------------------------------
settings = load_settings()

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MODEL = 4
EXIT_EVAL = 5

PUBLISHED_PREFIX = "published:"


# ---------------------------------------------------------
# Error -> exit status
# ---------------------------------------------------------
def exit_status(err: Exception) -> int:
    if isinstance(err, SweepError):
        return exit_status(err.cause)
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, ModelError):
        return EXIT_MODEL
    if isinstance(err, (LengthMismatch, WordMismatch)):
        return EXIT_EVAL
    if isinstance(err, (OSError, FileFormatError, MalformedPlainText, UnknownLabel, OverlapMismatch, MissingChunk)):
        return EXIT_IO
    return 1


def handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ChunkPunctError, OSError) as e:
            click.echo(f"[chunkpunct] error: {e}", err=True)
            sys.exit(exit_status(e))
    return wrapper


# ---------------------------------------------------------
# Shared options
# ---------------------------------------------------------
def chunk_options(command):
    command = click.option(
        "--overlap", type=int, default=None,
        help="Words shared by consecutive chunks, 0 disables overlapping [default: chunk_size // 2].",
    )(command)
    command = click.option(
        "--chunk-size", type=int, default=settings["chunk_size"], show_default=True,
        help="Words per chunk.",
    )(command)
    return command


def model_options(command):
    options = [
        click.option("--model", "kind", type=click.Choice(["oracle", "noise", "baseline", "external"]),
                     default="oracle", show_default=True),
        click.option("--noise-width", type=int, default=3, show_default=True,
                     help="Boundary width b for the noise model."),
        click.option("--noise-case-width", type=int, default=None,
                     help="Boundary width of case corruption [default: ceil(b / 2)]."),
        click.option("--noise-prob", type=float, default=1.0, show_default=True),
        click.option("--seed", type=int, default=settings["seed"], show_default=True),
        click.option("--table", type=click.Path(dir_okay=False), default=None,
                     help="Baseline table written by train-baseline."),
        click.option("--case-context", is_flag=True,
                     help="Baseline: predict case from the left bigram before the word's own counts."),
        click.option("--model-cmd", default=None, help="External model command line."),
        click.option("--model-format", type=click.Choice(FORMATS), default=PLAIN, show_default=True,
                     help="Output format the external model writes."),
        click.option("--batch-size", type=int, default=settings["batch_size"], show_default=True),
        click.option("--timeout", type=float, default=settings["model_timeout"], show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def model_spec(kind, noise_width, noise_case_width, noise_prob, seed, table, case_context, model_cmd,
               model_format, batch_size, timeout) -> RestorerSpec:
    return build_config(
        RestorerSpec,
        kind=kind,
        width=noise_width,
        case_width=noise_case_width,
        prob=noise_prob,
        seed=seed,
        table=table,
        case_context=case_context,
        command=tuple(shlex.split(model_cmd)) if model_cmd else (),
        fmt=model_format,
        batch_size=batch_size,
        timeout=timeout,
    )


def chunking(chunk_size, overlap=None, min_words_cut=None) -> tuple[ChunkConfig, MergeConfig]:
    """Settings values apply only when the chunk size matches the configured one."""
    if overlap is None and chunk_size == settings["chunk_size"]:
        overlap = settings["overlap"]
    cfg = build_config(ChunkConfig, chunk_size=chunk_size, overlap=overlap)
    if min_words_cut is None:
        same = cfg.overlap == settings["overlap"]
        min_words_cut = settings["min_words_cut"] if same else cfg.overlap // 2
    mcfg = build_config(MergeConfig, min_words_cut=min_words_cut)
    return cfg, mcfg.check(cfg)


def parse_m_values(text: str, overlap: int) -> list[int]:
    """Accepts "3", "0,4,7" or a range "0..15"; "V" stands for the overlap."""
    text = text.replace("V", str(overlap))
    try:
        if ".." in text:
            low, high = text.split("..", 1)
            return list(range(int(low), int(high) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --min-words-cut value {text!r}")


def load_report(source: str) -> tuple[str, MetricsReport]:
    if source.startswith(PUBLISHED_PREFIX):
        name = source[len(PUBLISHED_PREFIX):]
        published = load_published_results()
        if name not in published:
            raise ConfigError(f"unknown published result {name!r}, choose from {sorted(published)}")
        return published[name].get("title", name), MetricsReport.from_json(published[name])
    return source, MetricsReport.from_json(read_json(source))


# ---------------------------------------------------------
# CLI
# ---------------------------------------------------------
@click.group()
@click.option("--log-level", default=settings["log_level"], show_default=True)
@click.option("--log-format", type=click.Choice(["text", "json"]), default=settings["log_format"], show_default=True)
def cli(log_level, log_format):
    """Punctuation and case restoration of long transcripts by overlapped chunks."""
    configure_logging(log_level, log_format)


@cli.command()
@click.option("--input", "input_path", required=True)
@click.option("--output", "output_path", required=True)
@chunk_options
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@click.option("--ascii-only", is_flag=True, help="Keep A-Z letters only.")
@handle_errors
def prepare(input_path, output_path, chunk_size, overlap, fmt, ascii_only):
    """Clean raw text into (input chunk, target chunk) training pairs."""
    cfg = chunking(chunk_size, overlap)[0]
    pairs = []
    for line in read_lines(input_path):
        sentences = clean_text(line, ascii_only=ascii_only)
        if sentences:
            pairs.extend(make_pairs(sentences, cfg, fmt))
    write_pairs(output_path, pairs)
    logger.info("wrote %d pairs to %s", len(pairs), output_path)


@cli.command("stats")
@click.option("--input", "input_path", required=True)
@click.option("--ascii-only", is_flag=True)
@handle_errors
def stats_command(input_path, ascii_only):
    """Label counts of a raw corpus."""
    sentences = [s for line in read_lines(input_path) for s in clean_text(line, ascii_only=ascii_only)]
    frame = stats(sentences).to_frame()
    click.echo(tabulate(frame.values.tolist(), headers=list(frame.columns)))


@cli.command("split")
@click.option("--input", "input_path", required=True)
@click.option("--output", "output_path", required=True)
@click.option("--index", "index_path", required=True, help="Sidecar TSV (index, start, len).")
@chunk_options
@handle_errors
def split_command(input_path, output_path, index_path, chunk_size, overlap):
    """Split every document (one per line) into overlapped chunks."""
    cfg = chunking(chunk_size, overlap)[0]
    documents = [asr_words(line) for line in read_lines(input_path)]
    chunks = split_documents(documents, cfg)
    write_chunks(output_path, index_path, chunks)
    logger.info("split %d documents into %d chunks", len(documents), len(chunks))


@cli.command("restore-chunks")
@click.option("--chunks", "chunks_path", required=True)
@click.option("--index", "index_path", required=True)
@click.option("--output", "output_path", required=True)
@click.option("--reference", "reference_path", default=None, help="Raw reference text for oracle and noise.")
@chunk_options
@model_options
@click.option("--workers", type=int, default=settings["workers"], show_default=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@handle_errors
def restore_chunks_command(chunks_path, index_path, output_path, reference_path, chunk_size, overlap,
                           workers, fmt, **model):
    """Restore every chunk independently, one output line per chunk."""
    cfg = chunking(chunk_size, overlap)[0]
    spec = model_spec(**model)
    references = reference_documents(read_lines(reference_path)) if reference_path else None
    restorer = build_restorer(spec, references=references, cfg=cfg)

    chunks = read_chunks(chunks_path, index_path)
    batch_size = spec.batch_size
    restored = dict(
        ((chunk.doc, chunk.index), seq)
        for chunk, seq in restore_chunks(restorer, chunks, max(1, workers), batch_size)
    )
    write_lines(output_path, (write_sequence(restored[(c.doc, c.index)], fmt) for c in chunks))
    logger.info("restored %d chunks", len(chunks))


@cli.command()
@click.option("--input", "input_path", default="-", show_default=True)
@click.option("--output", "output_path", default="-", show_default=True)
@click.option("--reference", "reference_path", default=None, help="Raw reference text; enables scoring.")
@click.option("--report", "report_path", default=None, help="Write the JSON metrics report here.")
@chunk_options
@click.option("--min-words-cut", type=int, default=None,
              help="Overlap words taken from the later chunk [default: overlap // 2].")
@model_options
@click.option("--workers", type=int, default=settings["workers"], show_default=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@handle_errors
def restore(input_path, output_path, reference_path, report_path, chunk_size, overlap, min_words_cut,
            workers, fmt, **model):
    """End to end: split, restore in parallel, merge, optionally score."""
    spec = model_spec(**model)
    chunk_cfg, merge_cfg = chunking(chunk_size, overlap, min_words_cut)
    cfg = build_config(
        PipelineConfig,
        chunk_size=chunk_cfg.chunk_size,
        overlap=chunk_cfg.overlap,
        min_words_cut=merge_cfg.min_words_cut,
        model=spec,
        input_path=input_path,
        output_path=output_path,
        reference_path=reference_path,
        report_path=report_path,
        fmt=fmt,
        workers=max(1, workers),
        batch_size=spec.batch_size,
    )
    result = run_pipeline(cfg)
    if result.report is not None and report_path is None:
        click.echo(format_report(result.report), err=True)


@cli.command("merge")
@click.option("--chunks", "chunks_path", required=True, help="Restored chunk lines.")
@click.option("--index", "index_path", required=True)
@click.option("--words", "words_path", default=None, help="Input chunk lines (needed for encoded chunks).")
@click.option("--output", "output_path", default="-", show_default=True)
@chunk_options
@click.option("--min-words-cut", type=int, default=None,
              help="Overlap words taken from the later chunk [default: overlap // 2].")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@handle_errors
def merge_command(chunks_path, index_path, words_path, output_path, chunk_size, overlap, min_words_cut, fmt):
    """Merge restored chunks back into one line per document."""
    cfg, mcfg = chunking(chunk_size, overlap, min_words_cut)

    lines = read_lines(chunks_path)
    if words_path is not None:
        chunks = read_chunks(words_path, index_path)
    else:
        chunks = None
        rows = read_index(index_path)
    n = len(chunks) if chunks is not None else len(rows)
    if len(lines) != n:
        raise FileFormatError(chunks_path, len(lines), f"{len(lines)} restored lines but {n} index rows")

    mergers = {}
    for i, line in enumerate(lines):
        if chunks is not None:
            chunk = chunks[i]
            seq = read_sequence(line, fmt, list(chunk.words))
        else:
            doc, index, start, length = rows[i]
            # global placeholders keep overlapping words equal across chunks
            placeholders = [f"w{start + j}" for j in range(length)] if fmt != PLAIN else None
            seq = read_sequence(line, fmt, placeholders)
            chunk = Chunk(index, start, tuple(t.word for t in seq), doc)
            if len(chunk) != length:
                raise LengthMismatch(length, len(chunk), f"chunk {index} of document {doc}")
        mergers.setdefault(chunk.doc, StreamMerger(cfg, mcfg)).push(chunk, seq)

    documents = [mergers[doc].finish() for doc in sorted(mergers)]
    write_lines(output_path, (write_sequence(seq, fmt) for seq in documents))


@cli.command()
@click.option("--ref", "ref_path", required=True)
@click.option("--hyp", "hyp_path", required=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@click.option("--report", "report_kind", type=click.Choice(["json", "tsv"]), default="json", show_default=True)
@click.option("--output", "output_path", default="-", show_default=True)
@handle_errors
def evaluate(ref_path, hyp_path, fmt, report_kind, output_path):
    """Score hypothesis lines against reference lines (one document per line)."""
    ref_lines = read_lines(ref_path)
    hyp_lines = read_lines(hyp_path)
    if len(ref_lines) != len(hyp_lines):
        raise LengthMismatch(len(ref_lines), len(hyp_lines), "reference vs hypothesis documents")

    if fmt == PLAIN:
        references = reference_documents(ref_lines)
    else:
        references = [read_sequence(line, fmt) for line in ref_lines]
    try:
        hypotheses = [read_sequence(line, fmt) for line in hyp_lines]
    except (MalformedPlainText, UnknownLabel) as e:
        raise FileFormatError(hyp_path, getattr(e, "position", 0), str(e))

    report = score_corpus(zip(references, hypotheses))
    if report_kind == "json":
        write_json(output_path, report.to_json())
    else:
        frame = report.to_frame()
        if output_path == "-":
            click.echo(frame.to_csv(sep="\t", index=False, lineterminator="\n"), nl=False)
        else:
            frame.to_csv(output_path, sep="\t", index=False, lineterminator="\n")
    logger.info("punctuation micro-F1 %.4f", report.micro().f1)


@cli.command("sweep")
@click.option("--reference", "reference_path", required=True, help="Raw reference text, one document per line.")
@click.option("--output", "output_path", default="-", show_default=True)
@chunk_options
@click.option("--min-words-cut", "m_text", default="0..V", show_default=True,
              help='Values to try: "0..V", "0..15" or "0,4,7".')
@model_options
@handle_errors
def sweep_command(reference_path, output_path, chunk_size, overlap, m_text, **model):
    """Score the whole evaluation set once per min_words_cut value (plot-ready TSV)."""
    cfg = chunking(chunk_size, overlap)[0]
    spec = model_spec(**model)
    references = reference_documents(read_lines(reference_path))
    restorer = build_restorer(spec, references=references, cfg=cfg)

    m_values = parse_m_values(m_text, cfg.overlap)
    progress = functools.partial(tqdm, desc="sweep", unit="m", disable=None, leave=False)
    report = sweep(references, restorer, cfg, m_values, progress=progress)

    frame = report.to_frame()
    if output_path == "-":
        click.echo(frame.to_csv(sep="\t", index=False, lineterminator="\n"), nl=False)
    else:
        frame.to_csv(output_path, sep="\t", index=False, lineterminator="\n")
    logger.info("swept %d min_words_cut values", len(report.entries))


@cli.command("train-baseline")
@click.option("--pairs", "pairs_path", required=True)
@click.option("--output", "output_path", required=True)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=settings["format"], show_default=True)
@handle_errors
def train_baseline_command(pairs_path, output_path, fmt):
    """Count tables for the frequency baseline from prepared pairs."""
    try:
        table = train_baseline(read_pairs(pairs_path), fmt)
    except (MalformedPlainText, UnknownLabel, LengthMismatch) as e:
        raise FileFormatError(pairs_path, 0, str(e))
    save_table(table, output_path)


@cli.command("compare")
@click.option("--a", "source_a", required=True, help="Report JSON, or published:<name>.")
@click.option("--b", "source_b", required=True, help="Report JSON, or published:<name>.")
@click.option("--all-classes", is_flag=True, help="Also show L and None.")
@handle_errors
def compare_command(source_a, source_b, all_classes):
    """Per-class deltas (a - b) of precision, recall and F1."""
    label_a, report_a = load_report(source_a)
    label_b, report_b = load_report(source_b)
    click.echo(format_compare(compare(report_a, report_b, all_classes), label_a, label_b))


if __name__ == "__main__":
    cli()
