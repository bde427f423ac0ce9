from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
MNIST_DIR = ROOT / "data" / "mnist"


def mnist_present() -> bool:
    return (MNIST_DIR / "train-images.idx3-ubyte.gz").exists() or \
        (MNIST_DIR / "train-images-idx3-ubyte").exists()


needs_mnist = pytest.mark.skipif(not mnist_present(), reason="MNIST IDX files not in data/mnist")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting ------------------------------------------------------
# Tests marked ``@pytest.mark.criterion(n)`` get one PASS/FAIL line each in the
# terminal summary; ``record_property("detail", ...)`` adds the measured values.

_criteria: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _criteria.append((marker.args[0], item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n, name, ok, detail in sorted(_criteria, key=lambda c: (c[0], c[1])):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
