import numpy as np
import pytest

from radiusnet.graph import SpatialGraph

# (criterion, passed, detail) lines collected by the acceptance tests
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(CRITERIA, key=lambda r: int(r[0].split()[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {name}: {detail}")


@pytest.fixture
def record():
    def _record(name, ok, detail=""):
        CRITERIA.append((name, bool(ok), detail))
        return ok

    return _record


def random_spatial_graph(n=30, alpha=0.05, seed=0, r_lo=0.05, r_hi=0.15):
    """Radius-model graph on the unit square, degree term off."""
    rng = np.random.default_rng(seed)
    xy = rng.random((n, 2))
    D = np.linalg.norm(xy[:, None] - xy[None], axis=2)
    r = rng.uniform(r_lo, r_hi, n)
    p = 1.0 / (1.0 + np.exp(-(r[:, None] + r[None] - D) / alpha))
    A = np.triu(rng.random((n, n)) < p, 1)
    return SpatialGraph.from_edges([str(i) for i in range(n)], xy, np.argwhere(A))


@pytest.fixture
def small_graph():
    return random_spatial_graph()


@pytest.fixture
def square_graph():
    # unit square: three sides plus one diagonal
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return SpatialGraph.from_edges(["a", "b", "c", "d"], coords, [(0, 1), (1, 2), (2, 3), (0, 2)])


def write_csvs(tmp_path, nodes, edges, name="g"):
    np_ = tmp_path / f"{name}_nodes.csv"
    ep = tmp_path / f"{name}_edges.csv"
    np_.write_text("id,x,y\n" + "".join(f"{a},{x},{y}\n" for a, x, y in nodes))
    ep.write_text("src,dst\n" + "".join(f"{a},{b}\n" for a, b in edges))
    return np_, ep
