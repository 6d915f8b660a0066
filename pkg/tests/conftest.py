import numpy as np
import pytest

from graphadvect.graphs import DirectedGraph


def random_graph(rng, n_range=(2, 30), density=None, balanced=False):
    """Random directed graph with weights uniform in [-2, 2] minus zero.

    With ``balanced=True`` the edge set is a union of random directed cycles,
    each carrying one weight, so every node's in- and out-weight agree.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    if balanced:
        weights = {}
        for _ in range(int(rng.integers(1, 4))):
            size = int(rng.integers(2, n + 1))
            cyc = rng.choice(n, size=size, replace=False)
            w = _weight(rng)
            for a, b in zip(cyc, np.roll(cyc, -1)):
                key = (int(a), int(b))
                weights[key] = weights.get(key, 0.0) + w
        edges = [(s, t, w) for (s, t), w in weights.items() if w != 0.0]
        return DirectedGraph(n, tuple(edges))
    p = rng.uniform(0.05, 0.6) if density is None else density
    edges = [
        (s, t, _weight(rng))
        for s in range(n)
        for t in range(n)
        if s != t and rng.random() < p
    ]
    return DirectedGraph(n, tuple(edges))


def _weight(rng):
    w = 0.0
    while w == 0.0:
        w = float(rng.uniform(-2, 2))
    return w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion."""
    key = request.node.name

    def record(number, title, passed, detail=""):
        ACCEPTANCE[key] = (number, title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE.values()):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")
