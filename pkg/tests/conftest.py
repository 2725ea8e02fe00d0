import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
MOCK_BACKEND = Path(__file__).parent / "helpers" / "mock_backend.py"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mock_backend_cmd():
    def cmd(mode: str) -> str:
        return f"{sys.executable} {MOCK_BACKEND} {mode}"

    return cmd
