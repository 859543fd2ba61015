import numpy as np
import pytest

from finslerlab import catalog as cat
from finslerlab.sampling import sample_points


@pytest.fixture(scope="session")
def charts():
    return {
        "euclidean_randers": cat.euclidean_randers(2),
        "funk_ball": cat.funk_ball(2),
        "funk_ball3": cat.funk_ball(3),
        "riemannian_sphere": cat.riemannian_sphere(2),
        "parallel_beta_product": cat.parallel_beta_product(3),
    }


@pytest.fixture(scope="session")
def funk():
    return cat.funk_ball(2)


@pytest.fixture(scope="session")
def sphere():
    return cat.riemannian_sphere(2)


def points(chart, count=20, seed=1):
    return sample_points(chart, count, seed)


def rel(err, ref) -> float:
    """max |err| / (1 + max |ref|)"""
    return float(np.max(np.abs(err)) / (1 + np.max(np.abs(ref))))


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""
    def _record(label: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
        print(line)
        _VERDICTS.append(line)
        assert ok, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
