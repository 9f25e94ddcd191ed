import numpy as np
import pytest
from hypothesis import settings, strategies as st

from alphatheta import LabeledBinaryTree, Params, parameter_grid

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

GRID = parameter_grid()
LEVEL = 1e-3


@pytest.fixture
def rng(request):
    # one independent stream per test, keyed by the test name
    key = [ord(c) for c in request.node.name]
    return np.random.default_rng(np.random.SeedSequence(20240611, spawn_key=key))


@st.composite
def trees(draw, min_n=1, max_n=9):
    """Random labelled binary trees built by inserting leaves on drawn edges."""
    n = draw(st.integers(min_n, max_n))
    t = LabeledBinaryTree.single()
    for _ in range(n - 1):
        t = t.insert(draw(st.sampled_from(t.sorted_blocks())))
    return t


params_st = st.sampled_from(GRID)


def p(alpha, theta) -> Params:
    return Params.parse(str(alpha), str(theta))


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
