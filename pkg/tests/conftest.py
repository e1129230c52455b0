import numpy as np
import pytest

from graphqec.ffield import FMat
from graphqec.graph import CodingGraph, check_admissible, search_graph
from graphqec.scheme import build_scheme


@pytest.fixture(scope="session")
def graph2():
    g = search_graph(2, 1, 5, 1, budget=20000, seed=0)
    assert g is not None
    return g


@pytest.fixture(scope="session")
def scheme2(graph2):
    return build_scheme(graph2, 1)


@pytest.fixture(scope="session")
def graph3():
    g = search_graph(3, 1, 5, 1, budget=20000, seed=0)
    assert g is not None
    return g


@pytest.fixture(scope="session")
def scheme3(graph3):
    return build_scheme(graph3, 1)


def small_graph(d: int, seed: int = 0) -> CodingGraph:
    """Random admissible graph with |I|=1, |J|=3, |L|=2 (cheap at any d)."""
    rng = np.random.default_rng(seed)
    I, J, L = ("i0",), ("j0", "j1", "j2"), ("l0", "l1")
    verts = I + J + L
    while True:
        m = rng.integers(0, d, size=(6, 6))
        m = np.triu(m, 1)
        m = m + m.T
        m[np.ix_([0, 4, 5], [0, 4, 5])] = 0
        g = CodingGraph(I, J, L, FMat(verts, verts, m, d), d)
        if check_admissible(g).ok:
            return g


@pytest.fixture(scope="session")
def make_small():
    return small_graph


@pytest.fixture(scope="session")
def small3():
    return build_scheme(small_graph(3), 0, certify=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion for the terminal summary."""
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number: int, ok: bool, detail: str) -> None:
        results[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
