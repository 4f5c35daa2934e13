import numpy as np
import pytest

from cpdlab import Rank1Tensor, Rank1Tuple, TensorFormat

_ACCEPTANCE_LINES: list[str] = []


def random_tensor(rng, dims):
    return Rank1Tensor([rng.standard_normal(n) for n in dims])


def random_tuple(rng, dims, r):
    return Rank1Tuple([random_tensor(rng, dims) for _ in range(r)], format=TensorFormat(dims))


@pytest.fixture
def rng():
    return np.random.default_rng(20180315)


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion, printed at session end."""

    def _report(name: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
