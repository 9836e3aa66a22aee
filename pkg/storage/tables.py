# storage/tables.py
"""
BaselineTable persistence: one TSV file, one section per count table.
Each section starts with a "# <name>" header line; rows are key columns
followed by one count per label.
"""

from collections import Counter

from services.codec_service import CaseLabel, PunctLabel
from services.errors import FileFormatError
from services.model_service import BaselineTable

CASE_ORDER = (CaseLabel.U, CaseLabel.L)
PUNCT_ORDER = (PunctLabel.FULL_STOP, PunctLabel.COMMA, PunctLabel.QUESTION, PunctLabel.NONE)

# section name -> (table attribute, number of key columns, label order)
SECTIONS = {
    "case": ("case_freq", 1, CASE_ORDER),
    "case_bigram": ("case_bigram", 2, CASE_ORDER),
    "case_initial": ("case_initial", 1, CASE_ORDER),
    "punct_bigram": ("punct_bigram", 2, PUNCT_ORDER),
    "punct_final": ("punct_final", 1, PUNCT_ORDER),
}


def save_table(table: BaselineTable, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for name, (attr, n_keys, order) in SECTIONS.items():
            header = ["key"] * n_keys + [label.value for label in order]
            f.write(f"# {name}\t" + "\t".join(header) + "\n")

            entries = getattr(table, attr)
            for key in sorted(entries):
                keys = key if n_keys > 1 else (key,)
                counts = entries[key]
                f.write("\t".join([*keys, *(str(counts[label]) for label in order)]) + "\n")


def load_table(path) -> BaselineTable:
    table = BaselineTable()
    section = None

    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                name = line[2:].split("\t", 1)[0]
                if name not in SECTIONS:
                    raise FileFormatError(path, line_no, f"unknown section {name!r}")
                section = SECTIONS[name]
                continue
            if section is None:
                raise FileFormatError(path, line_no, "row before any section header")

            attr, n_keys, order = section
            fields = line.split("\t")
            if len(fields) != n_keys + len(order):
                raise FileFormatError(path, line_no, f"expected {n_keys + len(order)} fields, got {len(fields)}")
            try:
                values = [int(v) for v in fields[n_keys:]]
            except ValueError:
                raise FileFormatError(path, line_no, "counts must be integers")
            if min(values) < 0:
                raise FileFormatError(path, line_no, "counts must be non-negative")
            counts = Counter({label: v for label, v in zip(order, values) if v > 0})

            key = tuple(fields[:n_keys]) if n_keys > 1 else fields[0]
            getattr(table, attr)[key] = counts

    return table
