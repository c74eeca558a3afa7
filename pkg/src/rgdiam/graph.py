"""Sparse undirected graphs: storage, G(n,p) / G(n,m) sampling, edge-list I/O
and connected components."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from .rng import as_generator


class ParameterError(ValueError):
    pass


class GraphParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph on vertices ``0..n-1`` in CSR form.

    ``indices[indptr[v]:indptr[v+1]]`` is the sorted neighbour list of ``v``;
    every edge is stored once in each direction.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def m(self) -> int:
        return int(self.indices.shape[0]) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge arrays ``(u, v)`` with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        keep = src < self.indices
        return src[keep], self.indices[keep].astype(np.int64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    @classmethod
    def from_edges(cls, n: int, u, v, check: bool = True) -> Graph:
        """Build from endpoint arrays.  With ``check`` the input must be a
        simple graph (no loops, no repeated pair) with endpoints in range."""
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise ValueError("endpoint arrays differ in length")
        if check and u.size:
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n:
                raise ValueError("vertex out of range")
            if np.any(u == v):
                raise ValueError("self-loop")
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            key = np.unique(lo * n + hi)
            if key.size != u.size:
                raise ValueError("duplicate edge")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        A = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n, n)).tocsr()
        A.sort_indices()
        idx_dtype = np.int32 if n < 2**31 else np.int64
        return cls(int(n), A.indptr.astype(np.int64), A.indices.astype(idx_dtype))

    @classmethod
    def from_networkx(cls, G) -> Graph:
        nodes = sorted(G.nodes())
        pos = {x: i for i, x in enumerate(nodes)}
        pairs = np.array([(pos[a], pos[b]) for a, b in G.edges()], dtype=np.int64).reshape(-1, 2)
        return cls.from_edges(len(nodes), pairs[:, 0], pairs[:, 1])

    def to_networkx(self):
        import networkx as nx
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        u, v = self.edges()
        G.add_edges_from(zip(u.tolist(), v.tolist()))
        return G

    def to_csr(self) -> csr_matrix:
        data = np.ones(self.indices.shape[0], dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def subgraph(self, vertices) -> tuple[Graph, np.ndarray]:
        """Induced subgraph on ``vertices``; returns it with the old ids of
        its vertices (new id ``i`` is old id ``ids[i]``)."""
        ids = np.unique(np.asarray(vertices, dtype=np.int64))
        new = np.full(self.n, -1, dtype=np.int64)
        new[ids] = np.arange(ids.size)
        u, v = self.edges()
        keep = (new[u] >= 0) & (new[v] >= 0)
        return Graph.from_edges(ids.size, new[u[keep]], new[v[keep]], check=False), ids


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def unrank_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear pair indices to ``(u, v)``, ``u < v``, in colex order:
    index ``v(v-1)/2 + u``."""
    k = np.asarray(k, dtype=np.int64)
    v = ((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    v = np.where(v * (v - 1) // 2 > k, v - 1, v)
    v = np.where((v + 1) * v // 2 <= k, v + 1, v)
    u = k - v * (v - 1) // 2
    return u, v


def sample_gnp(n: int, lam: float, seed) -> Graph:
    """G(n, p) with p = lam/n, by geometric skips over the pair index.

    Each of the ``n(n-1)/2`` pairs is present independently with probability
    ``lam/n``; expected time is O(n + m).
    """
    if n < 0:
        raise ParameterError("n must be non-negative")
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    if n == 0:
        return Graph.from_edges(0, [], [], check=False)
    p = lam / n
    if p > 1:
        raise ParameterError(f"edge probability lambda/n = {p} exceeds 1")
    rng = as_generator(seed)
    total = n_pairs(n)
    if p == 0 or total == 0:
        return Graph.from_edges(n, [], [], check=False)
    chunks = []
    pos = -1
    chunk = int(total * p + 6 * np.sqrt(total * p) + 64)
    while True:
        # a gap past the end is as good as any larger one, and clipping keeps
        # the cumulative sum from overflowing when p is tiny
        gaps = np.minimum(rng.geometric(p, size=chunk), total + 1)
        idx = pos + np.cumsum(gaps, dtype=np.int64)
        if idx[-1] >= total:
            chunks.append(idx[idx < total])
            break
        chunks.append(idx)
        pos = int(idx[-1])
        chunk = max(64, chunk // 4)
    u, v = unrank_pairs(np.concatenate(chunks))
    return Graph.from_edges(n, u, v, check=False)


def sample_gnm(n: int, m: int, seed) -> Graph:
    """Uniform simple graph with exactly ``m`` edges.

    Pair indices are drawn uniformly with replacement and the first ``m``
    distinct ones kept.
    """
    total = n_pairs(n) if n > 0 else 0
    if n < 0 or m < 0 or m > total:
        raise ParameterError(f"m={m} outside [0, {total}]")
    rng = as_generator(seed)
    if m == 0:
        return Graph.from_edges(n, [], [], check=False)
    if 2 * m > total:
        k = rng.choice(total, size=m, replace=False)
    else:
        seen: set[int] = set()
        picked: list[int] = []
        while len(picked) < m:
            for x in rng.integers(0, total, size=m - len(picked) + 16).tolist():
                if x not in seen:
                    seen.add(x)
                    picked.append(x)
                    if len(picked) == m:
                        break
        k = np.array(picked, dtype=np.int64)
    u, v = unrank_pairs(k)
    return Graph.from_edges(n, u, v, check=False)


def write_edgelist(g: Graph, path: str | os.PathLike) -> None:
    """Write ``"n m"`` then one ``"u v"`` line per edge, ``u < v``."""
    u, v = g.edges()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {g.m}\n")
        if u.size:
            np.savetxt(fh, np.column_stack([u, v]), fmt="%d")


def read_edgelist(path: str | os.PathLike) -> Graph:
    with open(path, "r", encoding="ascii") as fh:
        return parse_edgelist(fh.read())


def parse_edgelist(text: str) -> Graph:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GraphParseError("empty input", 1)
    n, m = _parse_pair(lines[0], 1, "header")
    if n < 0 or m < 0:
        raise GraphParseError("negative header value", 1)
    if len(lines) - 1 < m:
        raise GraphParseError(f"header declares {m} edges, found {len(lines) - 1}",
                              len(lines) + 1)
    if len(lines) - 1 > m:
        raise GraphParseError(f"unexpected line after {m} edges", m + 2)
    u = np.empty(m, dtype=np.int64)
    v = np.empty(m, dtype=np.int64)
    seen: set[tuple[int, int]] = set()
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        a, b = _parse_pair(line, lineno, "edge")
        if not (0 <= a < n and 0 <= b < n):
            raise GraphParseError("vertex out of range", lineno)
        if a == b:
            raise GraphParseError("self-loop", lineno)
        if a > b:
            raise GraphParseError("edge endpoints must satisfy u < v", lineno)
        if (a, b) in seen:
            raise GraphParseError("duplicate edge", lineno)
        seen.add((a, b))
        u[i], v[i] = a, b
    return Graph.from_edges(n, u, v, check=False)


def _parse_pair(line: str, lineno: int, what: str) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise GraphParseError(f"malformed {what} line {line!r}", lineno)
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise GraphParseError(f"malformed {what} line {line!r}", lineno) from None


@dataclass(frozen=True)
class ComponentLabeling:
    labels: np.ndarray
    sizes: np.ndarray
    largest: int

    @property
    def count(self) -> int:
        return int(self.sizes.shape[0])

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def sorted_sizes(self) -> np.ndarray:
        return np.sort(self.sizes)[::-1]


def components(g: Graph) -> ComponentLabeling:
    """Connected components.  Labels are numbered in order of each
    component's lowest vertex; ``largest`` is the lowest label among the
    components of maximum size."""
    if g.n == 0:
        return ComponentLabeling(np.zeros(0, np.int64), np.zeros(0, np.int64), -1)
    _, raw = connected_components(g.to_csr(), directed=False)
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    labels = relabel[inverse].astype(np.int64)
    sizes = np.bincount(labels, minlength=order.size).astype(np.int64)
    return ComponentLabeling(labels, sizes, int(np.argmax(sizes)))


def component_order(lab: ComponentLabeling) -> tuple[np.ndarray, np.ndarray]:
    """Vertices grouped by component: ``order[start[c]:start[c+1]]`` lists
    component ``c`` in increasing vertex order."""
    order = np.argsort(lab.labels, kind="stable")
    start = np.zeros(lab.count + 1, dtype=np.int64)
    np.cumsum(lab.sizes, out=start[1:])
    return order, start
