import numpy as np
import pytest

from ncherglotz.algebra import AlgebraDescriptor
from ncherglotz.freefunc import random_representation

REP_CLASSES = [
    ("full", 1, 2, 1),
    ("full", 2, 1, 2),
    ("full", 2, 2, 2),
    ("diagonal", 2, 2, 1),
    ("diagonal", 3, 1, 2),
]


def make_rep(kind, k, s, d, seed):
    rng = np.random.default_rng(seed)
    return random_representation(AlgebraDescriptor(kind, k), s, d, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(params=range(len(REP_CLASSES)), ids=[f"{c[0]}{c[1]}-s{c[2]}-d{c[3]}" for c in REP_CLASSES])
def rep(request):
    kind, k, s, d = REP_CLASSES[request.param]
    return make_rep(kind, k, s, d, seed=1000 + request.param)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
