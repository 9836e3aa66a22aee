from pathlib import Path

import numpy as np

from services.codec_service import CaseLabel, PunctLabel, Token

FIXTURES = Path(__file__).parent / "fixtures"

VETO_SENTENCE = "The bill does not become law, unless houses of Congress vote to override the veto."
VETO_INPUT = "the bill does not become law unless houses of congress vote to override the veto"
VETO_CHUNK1_INPUT = "the bill does not become law unless houses of congress"
VETO_CHUNK2_INPUT = "law unless houses of congress vote to override the veto"
VETO_CHUNK1_PLAIN = "The bill does not become law, unless houses of Congress"
VETO_CHUNK2_PLAIN = "law, unless houses of Congress vote to override the veto."
VETO_CHUNK1_ENCODED = "U$ L$ L$ L$ L$ L, L$ L$ L$ U$"
VETO_CHUNK2_ENCODED = "L, L$ L$ L$ U$ L$ L$ L$ L$ L."

VOCABULARY = (
    "the", "a", "bill", "law", "house", "vote", "river", "city", "train", "school",
    "doctor", "council", "budget", "book", "window", "morning", "said", "went", "saw",
    "made", "took", "long", "small", "quiet", "busy", "late", "again", "never", "often",
    "london", "paris", "mary", "john", "congress", "monday", "friday",
)

CASES = (CaseLabel.U, CaseLabel.L)
PUNCTS = (PunctLabel.FULL_STOP, PunctLabel.COMMA, PunctLabel.QUESTION, PunctLabel.NONE)


def random_words(rng: np.random.Generator, n: int) -> list[str]:
    return [VOCABULARY[i] for i in rng.integers(0, len(VOCABULARY), size=n)]


def random_sequence(rng: np.random.Generator, n: int, words: list[str] | None = None) -> list[Token]:
    words = random_words(rng, n) if words is None else words
    cases = rng.integers(0, len(CASES), size=len(words))
    puncts = rng.integers(0, len(PUNCTS), size=len(words))
    return [Token(w, CASES[c], PUNCTS[p]) for w, c, p in zip(words, cases, puncts)]


def synthetic_text(rng: np.random.Generator, n_words: int) -> str:
    """
    Raw text of sentences 4-20 words long: first word capitalized, about 10%
    of later words capitalized, about 8% commas, a quarter of the sentences
    are questions.
    """
    out = []
    produced = 0
    while produced < n_words:
        length = int(rng.integers(4, 21))
        words = random_words(rng, length)
        for i, word in enumerate(words):
            if i == 0 or rng.random() < 0.10:
                word = word.capitalize()
            if i == length - 1:
                word += "?" if rng.random() < 0.25 else "."
            elif rng.random() < 0.08:
                word += ","
            out.append(word)
        produced += length
    return " ".join(out)
