import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the multi-hour training criteria")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training runs (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow training run; pass --runslow (finished runs in the bench dir are reused)")
    for item in items:
        if "slow" in item.keywords and not _bench_ready(item):
            item.add_marker(skip)


def bench_dir() -> Path:
    return Path(os.environ.get("LPFNO_BENCH_DIR", ROOT / ".bench"))


def _bench_ready(item):
    # a slow criterion whose runs already finished costs only an evaluation
    runs = getattr(item.function, "bench_runs", ())
    return bool(runs) and all((bench_dir() / r / "metrics.json").exists() for r in runs)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion for the run summary."""
    def record(number, passed, detail):
        ACCEPTANCE_LINES.append((number, f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"))
        print(ACCEPTANCE_LINES[-1][1])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)
