import networkx as nx
import numpy as np
import pytest

from specpart.graph import Graph

# (number, title) -> (verdict, detail), filled by the report hook below
ACCEPTANCE = {}


def random_connected_graph(n, p, seed):
    """Erdos-Renyi graph, retried with a bumped seed until connected."""
    s = seed
    while True:
        g = nx.gnp_random_graph(n, p, seed=s)
        if nx.is_connected(g):
            return Graph.from_edges(n, list(g.edges()))
        s += 10_007


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def cycle4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def edge():
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def detail(request):
    """Free-form measurements an acceptance test wants in the summary."""
    d = {}
    request.node.acceptance_detail = d
    return d


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    num, title = mark.args
    info = ", ".join(f"{k}={v}" for k, v in getattr(item, "acceptance_detail", {}).items())
    if rep.passed and not hasattr(rep, "wasxfail"):
        verdict = "PASS"
    else:
        verdict = "FAIL"
        if call.excinfo is not None and not call.excinfo.errisinstance(AssertionError):
            info = f"{info}; {call.excinfo.typename}: {call.excinfo.value}".strip("; ")
        elif call.excinfo is not None:
            info = f"{info}; {str(call.excinfo.value).splitlines()[0][:120]}".strip("; ")
    ACCEPTANCE[num] = (title, verdict, info)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, verdict, info = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  {title}  [{info}]")
