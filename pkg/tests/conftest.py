import networkx as nx
import numpy as np
import pytest

from rgdiam.graph import Graph

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion and return the
    verdict, so a test can do ``assert report(k, ok, detail)``."""

    def _record(number: int, passed: bool, detail: str) -> bool:
        line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA[number] = line
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])


def random_small_graph(rng: np.random.Generator, n_max: int = 64) -> Graph:
    n = int(rng.integers(1, n_max + 1))
    p = float(rng.choice([0.02, 0.05, 0.1, 0.2, 0.3, 0.5]))
    return Graph.from_networkx(nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31))))


def nx_diameter(g: Graph) -> int:
    """Largest finite distance, from networkx all-pairs BFS."""
    best = 0
    for _, dist in nx.all_pairs_shortest_path_length(g.to_networkx()):
        best = max(best, max(dist.values()))
    return best
