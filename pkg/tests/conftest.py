"""Shared test fixtures and paths."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
REPO_DIR = TESTS_DIR.parent
SAMPLE_DIR = REPO_DIR / "sample"
GOLDEN_DIR = TESTS_DIR / "golden"
STUB_ADAPTER = TESTS_DIR / "stub_adapter.py"

# `python -m pytest` from the repo root does not put tests/ on sys.path
# when invoked with importmode=prepend and an installed package; be explicit
# so `import corpusgen` works everywhere.
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def sample_dir() -> Path:
    assert SAMPLE_DIR.is_dir(), "bundled sample corpus is missing"
    return SAMPLE_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    assert GOLDEN_DIR.is_dir(), "golden files are missing"
    return GOLDEN_DIR


@pytest.fixture
def stub_cmd() -> str:
    """Command prefix that runs the stub adapter in this interpreter."""
    return f"{sys.executable} {STUB_ADAPTER}"
