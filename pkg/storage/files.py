# storage/files.py
"""Line-oriented UTF-8 files. A path of "-" means standard input / output."""

import json
import sys
from collections.abc import Iterable
from pathlib import Path

import pandas as pd

from services.chunk_service import Chunk
from services.errors import FileFormatError

STDIO = "-"
INDEX_COLUMNS = ["index", "start", "len"]


# ==========================================================
# Plain lines
# ==========================================================
def read_lines(path) -> list[str]:
    if str(path) == STDIO:
        return [line.rstrip("\n") for line in sys.stdin]
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def write_lines(path, lines: Iterable[str]):
    if str(path) == STDIO:
        for line in lines:
            sys.stdout.write(line + "\n")
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


# ==========================================================
# Pair TSV: <input chunk>\t<target chunk>
# ==========================================================
def read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    for line_no, line in enumerate(read_lines(path), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FileFormatError(path, line_no, f"expected 2 tab-separated fields, got {len(parts)}")
        pairs.append((parts[0], parts[1]))
    return pairs


def write_pairs(path, pairs: Iterable[tuple[str, str]]):
    write_lines(path, (f"{source}\t{target}" for source, target in pairs))


# ==========================================================
# Chunk files + sidecar index (index restarts at 0 per document)
# ==========================================================
def write_chunks(chunks_path, index_path, chunks: Iterable[Chunk]):
    chunks = list(chunks)
    write_lines(chunks_path, (" ".join(c.words) for c in chunks))
    frame = pd.DataFrame(
        [(c.index, c.start, len(c)) for c in chunks],
        columns=INDEX_COLUMNS,
    )
    frame.to_csv(index_path, sep="\t", index=False, lineterminator="\n")


def read_index(index_path) -> list[tuple[int, int, int, int]]:
    """Rows of (doc, index, start, len); a new document begins at every index 0."""
    try:
        frame = pd.read_csv(index_path, sep="\t", dtype=int)
    except (ValueError, pd.errors.ParserError) as e:
        raise FileFormatError(index_path, 0, f"bad index file: {e}")
    if list(frame.columns) != INDEX_COLUMNS:
        raise FileFormatError(index_path, 1, f"expected columns {INDEX_COLUMNS}, got {list(frame.columns)}")

    rows = []
    doc = -1
    for index, start, length in frame[INDEX_COLUMNS].to_numpy():
        if index == 0:
            doc += 1
        if doc < 0:
            raise FileFormatError(index_path, 2, "first row must have index 0")
        rows.append((doc, int(index), int(start), int(length)))
    return rows


def read_chunks(chunks_path, index_path) -> list[Chunk]:
    lines = read_lines(chunks_path)
    rows = read_index(index_path)
    if len(lines) != len(rows):
        raise FileFormatError(chunks_path, len(lines), f"{len(lines)} chunk lines but {len(rows)} index rows")

    chunks = []
    for line_no, (line, (doc, index, start, length)) in enumerate(zip(lines, rows), start=1):
        words = tuple(line.split())
        if len(words) != length:
            raise FileFormatError(chunks_path, line_no, f"index says {length} words, line has {len(words)}")
        chunks.append(Chunk(index, start, words, doc))
    return chunks


# ==========================================================
# JSON reports
# ==========================================================
def write_json(path, data: dict):
    text = json.dumps(data, indent=2, sort_keys=False) + "\n"
    if str(path) == STDIO:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise FileFormatError(path, e.lineno, e.msg)
