import sys

import numpy as np
import pytest

from immidx.specs import EXAMPLES, build


@pytest.fixture(scope="session")
def examples():
    return {name: build(desc) for name, desc in EXAMPLES.items()}


@pytest.fixture(scope="session")
def lifted(examples):
    return examples["lifted"]


@pytest.fixture(scope="session")
def curve(examples):
    return examples["one_loop_curve"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def records(examples):
    from immidx.intersections import find_self_intersections
    names = ["one_loop_curve", "lifted", "reflected_lifted", "perturbed_lifted",
             "concat_lifted_lifted", "concat_curves"]
    return {k: find_self_intersections(examples[k]) for k in names}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
