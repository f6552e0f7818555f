import numpy as np
import pytest

from hankel_sigma.transforms import TestFunction

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_VERDICTS, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(rows):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


@pytest.fixture
def verdict(request):
    """Record one acceptance line; returns ``ok`` so tests can assert on it."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        ok = bool(ok)
        request.config.stash[_VERDICTS].append((number, title, ok, detail))
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        return ok

    return record


@pytest.fixture(scope="session")
def bump_corpus():
    """Ten polynomial-times-bump test functions with a fixed seed."""
    rng = np.random.default_rng(7)
    out = []
    for _ in range(10):
        c = rng.uniform(0.5, 3.0)
        w = rng.uniform(0.1, 0.9) * c * 0.9
        out.append(TestFunction(c, w, tuple(rng.normal(size=rng.integers(1, 4)))))
    return out
