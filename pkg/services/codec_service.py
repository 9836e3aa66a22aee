# services/codec_service.py

import unicodedata
from dataclasses import dataclass
from enum import Enum

import regex

from services.errors import LengthMismatch, MalformedPlainText, UnknownLabel


# ==========================================================
# LABELS
# ==========================================================
class CaseLabel(str, Enum):
    U = "U"
    L = "L"


class PunctLabel(str, Enum):
    FULL_STOP = "."
    COMMA = ","
    QUESTION = "?"
    NONE = "$"


# surface character -> label; "$" never appears in plain text
MARKS = {
    ".": PunctLabel.FULL_STOP,
    ",": PunctLabel.COMMA,
    "?": PunctLabel.QUESTION,
}

ENCODED_LABELS = frozenset(c.value + p.value for c in CaseLabel for p in PunctLabel)

PLAIN = "plain"
ENCODED = "encoded"
FORMATS = (PLAIN, ENCODED)

_COMBINING = regex.compile(r"\p{M}+")


# ==========================================================
# TOKEN
# ==========================================================
@dataclass(frozen=True, slots=True)
class Token:
    """
    A word stored lowercase, with its case and punctuation labels.

    U only uppercases the first character, so a U word whose first letter has
    no one-character uppercase ("ßa" -> "SSa") does not survive plain text;
    the encoded format keeps it.
    """

    word: str
    case: CaseLabel = CaseLabel.L
    punct: PunctLabel = PunctLabel.NONE

    def __post_init__(self):
        if not self.word:
            raise ValueError("token word must be non-empty")
        if any(ch in MARKS or ch.isspace() for ch in self.word):
            raise ValueError(f"token word {self.word!r} contains punctuation or spaces")
        if self.word != self.word.lower():
            raise ValueError(f"token word {self.word!r} must be lowercase")

    @property
    def label(self) -> str:
        """Two-character encoded label, e.g. "U$" or "L,"."""
        return self.case.value + self.punct.value


# A restoration hypothesis or a reference: just an ordered list of tokens.
LabeledSequence = list[Token]


def fold_word(word: str) -> str:
    """Lowercase a word and drop combining marks that lowercasing can add ("İ" -> "i")."""
    return _COMBINING.sub("", unicodedata.normalize("NFC", word.lower()))


def words(seq: LabeledSequence) -> list[str]:
    return [t.word for t in seq]


def parse_label(label: str, position: int = 0) -> tuple[CaseLabel, PunctLabel]:
    if label not in ENCODED_LABELS:
        raise UnknownLabel(label, position)
    return CaseLabel(label[0]), PunctLabel(label[1])


# ==========================================================
# ENCODED FORMAT
# ==========================================================
def encode(seq: LabeledSequence) -> str:
    return " ".join(t.label for t in seq)


def decode(line: str, input_words: list[str]) -> LabeledSequence:
    labels = line.split()
    if len(labels) != len(input_words):
        raise LengthMismatch(len(input_words), len(labels), "encoded line")

    seq = []
    for i, (label, word) in enumerate(zip(labels, input_words)):
        case, punct = parse_label(label, i)
        seq.append(Token(fold_word(word), case, punct))
    return seq


# ==========================================================
# PLAIN FORMAT
# ==========================================================
def parse_plain(line: str) -> LabeledSequence:
    """
    Parse restored plain text ("law, unless houses of Congress").
    A word may carry at most one trailing mark, glued to it.
    """
    seq = []
    for i, surface in enumerate(line.split()):
        punct = PunctLabel.NONE
        body = surface
        if body and body[-1] in MARKS:
            punct = MARKS[body[-1]]
            body = body[:-1]

        if not body:
            raise MalformedPlainText(i, f"mark {surface!r} is not attached to a word")
        if any(ch in MARKS for ch in body):
            raise MalformedPlainText(i, f"{surface!r} has more than one mark")

        word = fold_word(body)
        if not word:
            raise MalformedPlainText(i, f"{surface!r} has no letters")
        case = CaseLabel.U if body[0].isupper() else CaseLabel.L
        seq.append(Token(word, case, punct))
    return seq


def render_token(token: Token) -> str:
    word = token.word
    if token.case is CaseLabel.U:
        word = word[0].upper() + word[1:]
    if token.punct is not PunctLabel.NONE:
        word += token.punct.value
    return word


def render_plain(seq: LabeledSequence) -> str:
    return " ".join(render_token(t) for t in seq)


# ==========================================================
# Format dispatch (used by storage and the CLI)
# ==========================================================
def read_sequence(line: str, fmt: str, input_words: list[str] | None = None) -> LabeledSequence:
    if fmt == PLAIN:
        return parse_plain(line)
    if fmt == ENCODED:
        if input_words is None:
            # label-only comparison: placeholder words keep positions aligned
            input_words = [f"w{i}" for i in range(len(line.split()))]
        return decode(line, input_words)
    raise ValueError(f"unknown format {fmt!r}")


def write_sequence(seq: LabeledSequence, fmt: str) -> str:
    if fmt == PLAIN:
        return render_plain(seq)
    if fmt == ENCODED:
        return encode(seq)
    raise ValueError(f"unknown format {fmt!r}")
