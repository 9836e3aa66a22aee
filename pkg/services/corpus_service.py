# services/corpus_service.py

import unicodedata
from collections import Counter
from dataclasses import dataclass

import pandas as pd
import regex

from services.chunk_service import ChunkConfig, split
from services.codec_service import (
    MARKS,
    PLAIN,
    CaseLabel,
    PunctLabel,
    Token,
    LabeledSequence,
    fold_word,
    write_sequence,
)


SENTENCE_END = (PunctLabel.FULL_STOP, PunctLabel.QUESTION)

_NOT_LETTER = regex.compile(r"\P{L}+")
_NOT_ASCII_LETTER = regex.compile(r"[^A-Za-z]+")
_ALNUM = regex.compile(r"[\p{L}\p{N}]")


# ==========================================================
# TYPES
# ==========================================================
@dataclass(frozen=True)
class CleanSentence:
    words: tuple[str, ...]
    puncts: tuple[PunctLabel, ...]

    def __post_init__(self):
        if not self.words:
            raise ValueError("a sentence needs at least one word")
        if len(self.words) != len(self.puncts):
            raise ValueError(f"{len(self.words)} words but {len(self.puncts)} punctuation labels")


@dataclass(frozen=True)
class CorpusStats:
    U: int = 0
    L: int = 0
    full_stop: int = 0
    comma: int = 0
    question: int = 0
    none: int = 0

    @property
    def total_words(self) -> int:
        return self.U + self.L

    def as_dict(self) -> dict:
        return {
            "U": self.U,
            "L": self.L,
            ".": self.full_stop,
            ",": self.comma,
            "?": self.question,
            "$": self.none,
        }

    def to_frame(self) -> pd.DataFrame:
        """Class / count table in the layout of a dataset-summary table."""
        return pd.DataFrame(list(self.as_dict().items()), columns=["class", "count"])


# ==========================================================
# CLEANUP
# ==========================================================
def _carried_mark(raw: str) -> PunctLabel:
    """Last kept mark after the token's last letter/digit (or anywhere if it has none)."""
    last_alnum = -1
    for i, ch in enumerate(raw):
        if _ALNUM.match(ch):
            last_alnum = i

    mark = PunctLabel.NONE
    for ch in raw[last_alnum + 1:]:
        if ch in MARKS:
            mark = MARKS[ch]
    return mark


def clean_text(raw: str, ascii_only: bool = False) -> list[CleanSentence]:
    """
    Reduce raw text to words of letters plus the three kept marks.

    Apostrophes, hyphens, digits and every other symbol are deleted in place
    ("don't" -> "dont"). A token left with no letters hands its mark to the
    previous surviving word. Sentences end at full stops and question marks.
    """
    text = unicodedata.normalize("NFC", raw)
    strip = _NOT_ASCII_LETTER if ascii_only else _NOT_LETTER

    words: list[str] = []
    puncts: list[PunctLabel] = []
    for token in text.split():
        mark = _carried_mark(token)
        word = strip.sub("", token)
        if word:
            words.append(word)
            puncts.append(mark)
        elif words and mark is not PunctLabel.NONE:
            puncts[-1] = mark
        # leading marks with no previous word are dropped

    sentences = []
    start = 0
    for i, punct in enumerate(puncts):
        if punct in SENTENCE_END:
            sentences.append(CleanSentence(tuple(words[start:i + 1]), tuple(puncts[start:i + 1])))
            start = i + 1
    if start < len(words):
        sentences.append(CleanSentence(tuple(words[start:]), tuple(puncts[start:])))
    return sentences


def to_asr_input(s: CleanSentence) -> list[str]:
    return [fold_word(w) for w in s.words]


def sentence_tokens(s: CleanSentence) -> LabeledSequence:
    return [
        Token(fold_word(w), CaseLabel.U if w[0].isupper() else CaseLabel.L, p)
        for w, p in zip(s.words, s.puncts)
    ]


def document_reference(sentences: list[CleanSentence]) -> LabeledSequence:
    """Aligned reference sequence of a whole document (sentences concatenated)."""
    seq: LabeledSequence = []
    for s in sentences:
        seq.extend(sentence_tokens(s))
    return seq


# ==========================================================
# PAIRS
# ==========================================================
def make_pairs(
    sentences: list[CleanSentence],
    cfg: ChunkConfig,
    fmt: str = PLAIN,
) -> list[tuple[str, str]]:
    """
    Chunk the document word stream and pair each ASR-style input chunk with
    its reference chunk. Targets carry full-sentence truth, so a chunk that
    starts mid-sentence keeps the reference labels of its first word.
    """
    reference = document_reference(sentences)
    input_words = [t.word for t in reference]

    pairs = []
    for chunk in split(input_words, cfg):
        target = reference[chunk.start:chunk.end]
        pairs.append((" ".join(chunk.words), write_sequence(target, fmt)))
    return pairs


# ==========================================================
# STATS
# ==========================================================
def stats(sentences: list[CleanSentence]) -> CorpusStats:
    counts = Counter()
    for s in sentences:
        for token in sentence_tokens(s):
            counts[token.case.value] += 1
            counts[token.punct.value] += 1

    return CorpusStats(
        U=counts["U"],
        L=counts["L"],
        full_stop=counts["."],
        comma=counts[","],
        question=counts["?"],
        none=counts["$"],
    )
