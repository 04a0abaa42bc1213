from __future__ import annotations

import pathlib

import pytest

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "src" / "numinv" / "corpus"

ALL_PROGRAMS = sorted(p.name for p in CORPUS.glob("*.mil"))


def corpus_source(name: str) -> str:
    return (CORPUS / name).read_text()


@pytest.fixture
def corpus_dir() -> pathlib.Path:
    return CORPUS
