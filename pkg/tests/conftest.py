import os

import pytest
from hypothesis import settings

from specwindow.config import Mode, ModelConfig
from specwindow.gadgets import load_gadget

settings.register_profile("default", max_examples=100, deadline=None)
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def seq_cfg():
    return ModelConfig.for_mode(Mode.SEQ)


@pytest.fixture
def a53_cfg():
    return ModelConfig.for_mode(Mode.A53)


@pytest.fixture
def ooo_cfg():
    return ModelConfig.for_mode(Mode.OOO)


@pytest.fixture(params=["spectre-pht", "siscloak1", "siscloak2"])
def core_gadget(request):
    return load_gadget(request.param)


ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.notes = number, title, []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        prev = ACCEPTANCE.get(self.number)
        if prev is not None:
            ok = ok and prev[0]
            self.notes = prev[2] + self.notes
        ACCEPTANCE[self.number] = (ok, self.title, self.notes)
        return False


@pytest.fixture(scope="session")
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, notes = ACCEPTANCE[n]
        detail = f" ({'; '.join(notes)})" if notes else ""
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}{detail}")
