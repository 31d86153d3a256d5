import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cutguard.dataset import SynthSpec, synth_corpus  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus():
    """Eight 4-frame-interjection samples on the default generator."""
    return synth_corpus(SynthSpec(interjection_len=4, seed=11), 8)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store one pass/fail line per acceptance criterion for the terminal summary."""
    def _record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(ok), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
