import math
import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)

from emprune import UnigramModel, WordCountTable, read_word_counts  # noqa: E402

DESK_CORPUS = os.path.join(HERE, 'data', 'web2_50k.txt')


@pytest.fixture
def toy_model():
    return UnigramModel({'a': math.log(0.6), 'aa': math.log(0.4)})


@pytest.fixture
def toy_corpus():
    return WordCountTable({'aaa': 1})


_cache = {}


def desk_corpus(dampening='ones'):
    key = ('desk', dampening)
    if key not in _cache:
        _cache[key] = read_word_counts(DESK_CORPUS, dampening)
    return _cache[key]


def desk_subset(n, dampening='ones'):
    """Deterministic n-type subset: evenly spaced over the sorted desk corpus."""
    full = desk_corpus(dampening)
    words = full.words
    step = len(words) / float(n)
    picked = [words[int(i * step)] for i in range(n)]
    return WordCountTable({w: full.raw_count(w) for w in picked}, dampening)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(':'))):
            terminalreporter.write_line(line)
