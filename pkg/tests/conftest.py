import functools

import pytest

from tautfiber.cli import load_corpus


@functools.lru_cache(maxsize=None)
def corpus_tri(name):
    for e in load_corpus():
        if e.name == name:
            return e.triangulation()
    raise KeyError(name)


@pytest.fixture(scope="session")
def corpus():
    return {e.name: e for e in load_corpus()}


@pytest.fixture
def tri():
    return corpus_tri


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
