import pytest

from topoprism.complex import build_complex, simplex_boundary
from topoprism.io import BUNDLED, load_bundled
from topoprism.prismatoid import validate_prismatoid

ANN6_FACETS = ["12a", "2ab", "23b", "3bc", "31c", "1ca"]

_cache = {}


def corpus(name):
    """Fresh copy of a bundled prismatoid (loaded once per session)."""
    if name not in _cache:
        _cache[name] = load_bundled(name)
    return _cache[name].copy()


def make_ann6():
    return validate_prismatoid(build_complex([list(f) for f in ANN6_FACETS]),
                               list("123"), list("abc"))


@pytest.fixture
def ann6():
    return make_ann6()


@pytest.fixture
def tetra():
    return simplex_boundary(list("1234"))


@pytest.fixture(params=BUNDLED)
def bundled(request):
    return corpus(request.param)


@pytest.fixture
def p1039():
    return corpus("p1039")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
