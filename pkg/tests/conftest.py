import itertools
import random

import pytest

from listpriv.core import ConceptClass


def random_class(rng: random.Random, n: int, ell: int, size: int) -> ConceptClass:
    universe = list(itertools.product(range(ell), repeat=n))
    return ConceptClass(n, ell, rng.sample(universe, min(size, len(universe))))


@pytest.fixture
def class_factory():
    return random_class


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
