import shutil
from pathlib import Path

import pytest
from hypothesis import settings

from amw.parser import Parser, parse_text
from amw.project import load_project
from support import selftest

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"


def corpus_model(name):
    return load_project(CORPUS / name).model


def expr(text):
    p = Parser(text)
    e = p.expr()
    assert not p.diagnostics and p.tok.kind == "EOF", text
    return e


@pytest.fixture
def hotel():
    return corpus_model("hotel")


@pytest.fixture
def project_copy(tmp_path):
    """Copy a corpus project into a temporary directory and return its path."""
    def make(name):
        dest = tmp_path / name
        shutil.copytree(CORPUS / name, dest)
        return dest
    return make


@pytest.fixture
def parse():
    return parse_text


# property tests draw from fixed seeds so repeated runs report identical results
settings.register_profile("amw", derandomize=True, database=None, deadline=None)
settings.load_profile("amw")


def pytest_terminal_summary(terminalreporter):
    if selftest.REPORTED:
        terminalreporter.section("acceptance criteria")
        for line in sorted(selftest.REPORTED):
            terminalreporter.write_line(line)
