"""
Boundary-noise experiments: overlapped chunks with a mid-range min_words_cut
should recover the punctuation a chunk-edge-weak model loses, while case
stays comparatively stable.
"""

import numpy as np
import pytest

from services.chunk_service import ChunkConfig
from services.corpus_service import clean_text, document_reference
from services.eval_service import sweep
from services.model_service import BoundaryNoiseRestorer, OracleRestorer
from tests.helpers import synthetic_text


@pytest.fixture(scope="module")
def references():
    rng = np.random.default_rng(1234)
    return [document_reference(clean_text(synthetic_text(rng, 2_000))) for _ in range(10)]


def noise_model(references, cfg):
    oracle = OracleRestorer.from_documents(references, cfg)
    return BoundaryNoiseRestorer(oracle, width=3, prob=1.0, seed=0)


def test_sweep_peaks_in_the_middle(references):
    cfg = ChunkConfig(chunk_size=30, overlap=15)
    result = sweep(references, noise_model(references, cfg), cfg, range(16))

    punct = [report.micro().f1 for _, report in result.entries]
    upper = result.f1("U")

    best_interior = max(punct[1:-1])
    assert best_interior > punct[0]
    assert best_interior > punct[-1]
    assert max(upper) - min(upper) < max(punct) - min(punct)


def test_overlap_beats_plain_chunking(references):
    overlapped = ChunkConfig(chunk_size=30, overlap=15)
    plain = ChunkConfig(chunk_size=30, overlap=0)

    with_merge = sweep(references, noise_model(references, overlapped), overlapped, [7])
    without = sweep(references, noise_model(references, plain), plain, [0])

    assert with_merge.entries[0][1].micro().f1 > without.entries[0][1].micro().f1


def test_noise_free_run_is_perfect(references):
    cfg = ChunkConfig(chunk_size=30, overlap=15)
    oracle = OracleRestorer.from_documents(references, cfg)
    result = sweep(references, oracle, cfg, [0, 7, 15])
    assert all(report.micro().f1 == 1.0 for _, report in result.entries)
