from pathlib import Path

import pytest

from bluec.pipeline import compile_files, compile_source

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# (file stem, top module)
DESIGNS = [
    ("tb1", "mkTb1"),
    ("counter", "mkCounter"),
    ("counter_plain", "mkCounterPlain"),
    ("counter_inc_first", "mkCounterIncFirst"),
    ("counter_inc_second", "mkCounterIncSecond"),
    ("test1", "test1"),
    ("tb2", "mkTb2"),
    ("nonstrict", "mkNonStrict"),
    ("dead", "mkDead"),
    ("fsm", "mkFsmDemo"),
    ("hierarchy", "mkHier"),
    ("fifo_chain", "mkFifoChain"),
    ("ram", "mkRamDemo"),
    ("ordering", "mkOrdering"),
    ("static_loop", "mkStaticLoop"),
    ("gcd", "mkGcdTb"),
    ("features", "mkFeatures"),
]


def corpus_path(stem: str) -> Path:
    return CORPUS / f"{stem}.bsv"


def build(stem: str, top: str, **kw):
    return compile_files([corpus_path(stem)], top, **kw)


def build_text(text: str, top: str, **kw):
    return compile_source(text, top, "t.bsv", **kw)


@pytest.fixture
def corpus():
    return build
