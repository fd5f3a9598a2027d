from __future__ import annotations

import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sawbound.gmatrix import build_gmatrix  # noqa: E402
from sawbound.lattice import builtin_lattice  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_matrix(name: str, scheme: str, mode: str, m: int, n: int):
    return build_gmatrix(builtin_lattice(name, scheme), m, n, mode)


@pytest.fixture
def matrix():
    return cached_matrix


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
