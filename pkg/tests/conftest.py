import sys

import pytest

from services.chunk_service import ChunkConfig, split
from services.corpus_service import clean_text, document_reference
from tests.helpers import FIXTURES, VETO_SENTENCE


@pytest.fixture
def veto_reference():
    return document_reference(clean_text(VETO_SENTENCE))


@pytest.fixture
def veto_cfg():
    return ChunkConfig(chunk_size=10, overlap=5)


@pytest.fixture
def veto_chunks(veto_reference, veto_cfg):
    return split([t.word for t in veto_reference], veto_cfg)


@pytest.fixture
def fake_model():
    return [sys.executable, str(FIXTURES / "fake_model.py")]
