"""Spatial graph container, CSV ingestion and spatial-statistics diagnostics."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

__all__ = [
    "GraphFormatError",
    "SpatialGraph",
    "DistanceMatrix",
    "SpatialStats",
    "load_graph",
    "write_graph",
    "pairwise_distances",
    "default_grid",
    "dispersion_from_counts",
    "index_of_dispersion",
    "kolmogorov_sf",
    "exponential_ks",
    "exponential_ks_test",
    "spatial_stats",
]

# distance matrices above this node count are computed row by row on demand
DENSE_DISTANCE_LIMIT = 5000


class GraphFormatError(ValueError):
    """Raised for malformed or inconsistent graph input."""


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    """Undirected simple graph whose nodes carry 2-D coordinates.

    Parameters
    ----------
    node_ids : tuple of str
        Opaque node identifiers, in index order.
    coords : ndarray of shape (n, 2)
        Node positions.
    adjacency : ndarray of shape (n, n), dtype bool
        Symmetric adjacency with an empty diagonal.
    """

    node_ids: tuple
    coords: np.ndarray
    adjacency: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ids = tuple(str(i) for i in self.node_ids)
        coords = np.asarray(self.coords, dtype=float).reshape(len(ids), 2)
        adj = np.asarray(self.adjacency, dtype=bool).reshape(len(ids), len(ids))
        if len(set(ids)) != len(ids):
            raise GraphFormatError("node ids must be unique")
        if not np.all(np.isfinite(coords)):
            raise GraphFormatError("coordinates must be finite")
        if not np.array_equal(adj, adj.T):
            raise GraphFormatError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise GraphFormatError("self-loops are not allowed")
        object.__setattr__(self, "node_ids", ids)
        object.__setattr__(self, "coords", _readonly(coords))
        object.__setattr__(self, "adjacency", _readonly(adj))
        object.__setattr__(self, "degrees", _readonly(adj.sum(axis=1).astype(np.int64)))

    @classmethod
    def from_edges(cls, node_ids, coords, edges=()):
        """Build a graph from an iterable of index pairs."""
        n = len(node_ids)
        adj = np.zeros((n, n), dtype=bool)
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphFormatError("self-loops are not allowed")
            if edges.min() < 0 or edges.max() >= n:
                raise GraphFormatError("edge endpoint out of range")
            adj[edges[:, 0], edges[:, 1]] = True
            adj[edges[:, 1], edges[:, 0]] = True
        return cls(tuple(node_ids), coords, adj)

    @property
    def n_nodes(self):
        return len(self.node_ids)

    @property
    def total_degree(self):
        return int(self.degrees.sum())

    @property
    def n_edges(self):
        return self.total_degree // 2

    @property
    def edges(self):
        """Edge index pairs ``(i, j)`` with ``i < j``, row-major order."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return np.column_stack([i, j])

    def with_edges(self, edges):
        """Same nodes and coordinates, different edge set."""
        return SpatialGraph.from_edges(self.node_ids, self.coords, edges)

    def index_of(self, node_id):
        try:
            return self._index[node_id]
        except AttributeError:
            object.__setattr__(self, "_index", {k: i for i, k in enumerate(self.node_ids)})
            return self._index[node_id]

    def fingerprint(self):
        """SHA-256 of the canonical node and edge content."""
        h = hashlib.sha256()
        for nid, (x, y) in zip(self.node_ids, self.coords):
            h.update(f"{nid},{x!r},{y!r}\n".encode())
        for a, b in _canonical_edge_rows(self):
            h.update(f"{a},{b}\n".encode())
        return h.hexdigest()

    def __repr__(self):
        return f"SpatialGraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


class DistanceMatrix:
    """Euclidean pairwise distances, dense up to ``DENSE_DISTANCE_LIMIT`` nodes."""

    def __init__(self, coords, dense=None):
        self._coords = _readonly(np.asarray(coords, dtype=float))
        n = len(self._coords)
        if dense is None:
            dense = n <= DENSE_DISTANCE_LIMIT
        self._full = None
        if dense:
            diff = self._coords[:, None, :] - self._coords[None, :, :]
            self._full = _readonly(np.sqrt((diff ** 2).sum(axis=-1)))

    def __len__(self):
        return len(self._coords)

    @property
    def is_dense(self):
        return self._full is not None

    def row(self, i):
        if self._full is not None:
            return self._full[i]
        return np.sqrt(((self._coords - self._coords[i]) ** 2).sum(axis=1))

    def pair(self, i, j):
        if self._full is not None:
            return float(self._full[i, j])
        return float(np.hypot(*(self._coords[i] - self._coords[j])))

    def pairs(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j)
        if self._full is not None:
            return self._full[i, j]
        return np.sqrt(((self._coords[i] - self._coords[j]) ** 2).sum(axis=-1))

    def to_array(self):
        """Full (n, n) matrix; materialises it when stored row-wise."""
        if self._full is not None:
            return self._full
        return np.vstack([self.row(i) for i in range(len(self))])


def pairwise_distances(g: SpatialGraph) -> DistanceMatrix:
    return DistanceMatrix(g.coords)


def _canonical_edge_rows(g):
    rows = []
    for i, j in g.edges:
        a, b = g.node_ids[i], g.node_ids[j]
        rows.append((a, b) if a <= b else (b, a))
    rows.sort()
    return rows


def _open_csv(path, header):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None or [c.strip() for c in first] != header:
        fh.close()
        raise GraphFormatError(f"{path}:1: expected header {','.join(header)!r}")
    return fh, reader


def load_graph(nodes_path, edges_path) -> SpatialGraph:
    """Read a graph from ``id,x,y`` and ``src,dst`` CSV files.

    Duplicate and reversed edges collapse into one undirected edge. Errors
    carry the offending file and line number.
    """
    fh, reader = _open_csv(nodes_path, ["id", "x", "y"])
    ids, coords = [], []
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise GraphFormatError(f"{nodes_path}:{line}: expected 3 fields, got {len(row)}")
            nid = row[0].strip()
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                raise GraphFormatError(f"{nodes_path}:{line}: non-numeric coordinate") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise GraphFormatError(f"{nodes_path}:{line}: non-finite coordinate")
            if not nid:
                raise GraphFormatError(f"{nodes_path}:{line}: empty node id")
            ids.append(nid)
            coords.append((x, y))
    index = {}
    for k, nid in enumerate(ids):
        if nid in index:
            raise GraphFormatError(f"{nodes_path}: duplicate node id {nid!r}")
        index[nid] = k

    fh, reader = _open_csv(edges_path, ["src", "dst"])
    edges = []
    with fh:
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise GraphFormatError(f"{edges_path}:{line}: expected 2 fields, got {len(row)}")
            a, b = row[0].strip(), row[1].strip()
            for nid in (a, b):
                if nid not in index:
                    raise GraphFormatError(f"{edges_path}:{line}: unknown node id {nid!r}")
            if a == b:
                raise GraphFormatError(f"{edges_path}:{line}: self-loop on {a!r}")
            edges.append((index[a], index[b]))
    return SpatialGraph.from_edges(ids, np.array(coords, dtype=float).reshape(-1, 2), edges)


def write_graph(g: SpatialGraph, nodes_path, edges_path):
    """Write the node file in index order and the canonical edge file."""
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for nid, (x, y) in zip(g.node_ids, g.coords):
            w.writerow([nid, repr(float(x)), repr(float(y))])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        w.writerows(_canonical_edge_rows(g))


def default_grid(n):
    """Quadrat grid with roughly two expected points per cell."""
    side = max(1, math.ceil(math.sqrt(n / 2)))
    return (side, side)


def dispersion_from_counts(counts):
    """Variance-to-mean ratio of quadrat counts (sample variance, ddof=1)."""
    counts = np.asarray(counts, dtype=float).ravel()
    if counts.size < 2:
        raise ValueError("need at least two quadrats")
    mean = counts.mean()
    if mean <= 0:
        raise ValueError("mean quadrat count is zero")
    return float(counts.var(ddof=1) / mean)


def index_of_dispersion(g: SpatialGraph, grid=None) -> float:
    """Index of dispersion of node positions over the coordinate bounding box."""
    if g.n_nodes == 0:
        raise ValueError("index of dispersion needs at least one node")
    gx, gy = default_grid(g.n_nodes) if grid is None else grid
    if gx < 1 or gy < 1 or gx * gy < 2:
        raise ValueError(f"invalid quadrat grid {(gx, gy)}")
    lo = g.coords.min(axis=0)
    hi = g.coords.max(axis=0)
    if np.all(hi - lo == 0):
        raise ValueError("all nodes coincide; bounding box is degenerate")
    # zero-width axes get a unit extent so every point lands in one row/column
    hi = np.where(hi > lo, hi, lo + 1.0)
    counts, _, _ = np.histogram2d(
        g.coords[:, 0], g.coords[:, 1], bins=[gx, gy],
        range=[[lo[0], hi[0]], [lo[1], hi[1]]],
    )
    return dispersion_from_counts(counts)


def kolmogorov_sf(x):
    """Survival function of the asymptotic Kolmogorov distribution."""
    return float(special.kolmogorov(x)) if x > 0 else 1.0


def exponential_ks(samples):
    """Fit an exponential by maximum likelihood and KS-test the fit.

    Returns
    -------
    rate, statistic, p_value : float
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("need at least one sample")
    mean = x.mean()
    if mean <= 0:
        raise ValueError("samples must have a positive mean")
    res = stats.kstest(x, "expon", args=(0.0, mean), method="asymp")
    return 1.0 / mean, float(res.statistic), float(res.pvalue)


@dataclass
class SpatialStats:
    n_nodes: int
    n_edges: int
    index_of_dispersion: float | None
    quadrat_grid: tuple
    exp_fit_rate: float | None
    ks_statistic: float | None
    ks_p_value: float | None
    linked_distances: list

    def to_dict(self):
        d = dict(self.__dict__)
        d["quadrat_grid"] = list(self.quadrat_grid)
        return d


def exponential_ks_test(g: SpatialGraph, d: DistanceMatrix | None = None):
    """Exponential fit and KS test on the distances of linked pairs."""
    if g.n_edges == 0:
        raise ValueError("exponential fit needs at least one edge")
    d = pairwise_distances(g) if d is None else d
    e = g.edges
    return exponential_ks(d.pairs(e[:, 0], e[:, 1]))


def spatial_stats(g: SpatialGraph, grid=None) -> SpatialStats:
    grid = default_grid(g.n_nodes) if grid is None else tuple(grid)
    d = pairwise_distances(g)
    e = g.edges
    linked = d.pairs(e[:, 0], e[:, 1]) if len(e) else np.empty(0)
    try:
        disp = index_of_dispersion(g, grid)
    except ValueError:
        disp = None
    rate = stat = p = None
    if g.n_edges and linked.mean() > 0:
        rate, stat, p = exponential_ks(linked)
    return SpatialStats(g.n_nodes, g.n_edges, disp, grid, rate, stat, p, [float(v) for v in linked])
