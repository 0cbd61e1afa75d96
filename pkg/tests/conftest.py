import itertools

import numpy as np
from hypothesis import strategies as st

from expressivity.graph import Graph, NodeFeatures


@st.composite
def graphs(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])


@st.composite
def featured_graphs(draw, min_n=1, max_n=8, alphabet=2):
    g = draw(graphs(min_n, max_n))
    labels = draw(st.lists(st.integers(0, alphabet - 1), min_size=g.n, max_size=g.n))
    return g, NodeFeatures.from_labels(labels, alphabet=range(alphabet))


@st.composite
def permutations(draw, n):
    return draw(st.permutations(list(range(n))))


def dense_walks(g: Graph, k: int) -> list[int]:
    """A^k 1 with Python ints via a dense object matrix (independent of the sparse code)."""
    a = np.zeros((g.n, g.n), dtype=object)
    for u, v in g.edges():
        a[u, v] = a[v, u] = 1
    v = np.array([1] * g.n, dtype=object)
    for _ in range(k):
        v = a.dot(v)
    return [int(x) for x in v]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
