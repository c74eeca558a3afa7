"""Exact diameter of large sparse graphs.

The diameter of a disconnected graph is the largest *finite* distance, i.e.
the maximum over components.  Components below ``SMALL_COMPONENT`` vertices
are solved by BFS from every vertex; larger ones by an iFUB scan (see
:func:`rgdiam._kernels._ifub_component`), by default after folding the
trees that hang off the 2-core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graph import Graph, component_order, components

INF = np.iinfo(np.uint32).max
SMALL_COMPONENT = 256
BATCH_WORDS = 4
# sparse graphs need few BFS sources, so a narrow batch wastes less; dense
# ones need many, and the row reads amortize better over a wider batch
WIDE_BATCH_WORDS = 16
WIDE_MIN_DEGREE = 8.0
ALGORITHMS = ("ifub", "ifub-plain", "all")
_TAG = {"ifub": "ifub", "ifub-plain": "ifub", "all": "all_bfs"}


@dataclass
class DiameterReport:
    diameter: int
    witness: tuple[int, int]
    per_component: list[tuple[int, int]] = field(repr=False)
    algorithm: str
    bfs_count: int

    def to_json(self) -> dict:
        return {
            "diameter": self.diameter,
            "witness": list(self.witness),
            "components": [list(c) for c in self.per_component],
            "bfs_count": self.bfs_count,
            "algorithm": self.algorithm,
        }


class DisconnectedError(ValueError):
    pass


def sssp_distances(g: Graph, source: int) -> np.ndarray:
    """BFS distances from ``source`` as uint32; unreachable vertices get
    :data:`INF`."""
    if not 0 <= source < g.n:
        raise IndexError(f"source {source} out of range for n={g.n}")
    dist = np.full(g.n, -1, dtype=np.int32)
    queue = np.empty(g.n, dtype=np.int64)
    K.bfs(g.indptr, g.indices, source, dist, queue)
    out = dist.astype(np.uint32)
    out[dist < 0] = INF
    return out


def sphere_sizes(g: Graph, sources, radius: int) -> np.ndarray:
    """``out[i, t]`` = number of vertices at distance exactly ``t`` from
    ``sources[i]``, for ``t <= radius``."""
    src = np.asarray(sources, dtype=np.int64)
    dist = np.full(g.n, -1, dtype=np.int32)
    queue = np.empty(g.n, dtype=np.int64)
    return K.sphere_sizes(g.indptr, g.indices, src, int(radius), dist, queue)


def eccentricity(g: Graph, v: int) -> int:
    d = sssp_distances(g, v)
    return int(d[d != INF].max())


def component_diameter(g: Graph, vertices, algorithm: str = "ifub",
                       threshold: int = SMALL_COMPONENT) -> tuple[int, tuple[int, int]]:
    """Diameter and a witness pair of the component spanned by ``vertices``.

    Raises :class:`DisconnectedError` if the vertices are not exactly one
    connected component of ``g``.
    """
    verts = np.unique(np.asarray(vertices, dtype=np.int64))
    if verts.size == 0:
        raise DisconnectedError("empty vertex set")
    reach = sssp_distances(g, int(verts[0]))
    members = np.flatnonzero(reach != INF)
    if not np.array_equal(members, verts):
        raise DisconnectedError("vertices do not form a single connected component")
    sub, ids = g.subgraph(verts)
    rep = graph_diameter(sub, algorithm, threshold)
    return rep.diameter, (int(ids[rep.witness[0]]), int(ids[rep.witness[1]]))


def graph_diameter(g: Graph, algorithm: str = "ifub",
                   threshold: int = SMALL_COMPONENT) -> DiameterReport:
    """Exact diameter over all components.

    ``algorithm`` is one of

    ``"ifub"``
        fold every tree hanging off the 2-core into a single path of the
        same height, then run the level scan with eccentricity-bound
        skipping on what is left (default);
    ``"ifub-plain"``
        the textbook level scan on the graph as given;
    ``"all"``
        BFS from every vertex.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if g.n == 0:
        return DiameterReport(0, (0, 0), [], _TAG[algorithm], 0)
    lab = components(g)
    if algorithm == "ifub":
        diam, wa, wb, nbfs = _folded(g, lab, threshold)
    else:
        order, start = component_order(lab)
        diam, wa, wb, nbfs = K.diameter_all(g.indptr, g.indices, order, start, threshold,
                                            algorithm != "all", algorithm == "ifub-plain",
                                            _batch_words(g))
    best = int(np.argmax(diam))
    per = list(zip(lab.sizes.tolist(), diam.tolist()))
    return DiameterReport(int(diam[best]), (int(wa[best]), int(wb[best])), per,
                          _TAG[algorithm], int(nbfs))


def _batch_words(g: Graph) -> int:
    dense = g.n > 0 and 2 * g.m / g.n >= WIDE_MIN_DEGREE
    return WIDE_BATCH_WORDS if dense else BATCH_WORDS


def _folded(g: Graph, lab, threshold: int):
    """Per-component diameters via the tree-folding reduction.

    A shortest path between two vertices in trees rooted at different core
    vertices ``r``, ``r'`` runs straight down both trees, so its length is
    ``depth + depth' + d(r, r')``.  Replacing the trees at ``r`` by one
    pendant path of length ``height(r)`` therefore keeps every such maximum,
    and pairs inside a single tree are covered by the peeling pass.
    """
    alive, parent, height, deep, best, best_a, best_b = K.peel_forest(g.indptr, g.indices)
    ncomp = lab.count
    # longest path inside the trees of each component
    diam = np.zeros(ncomp, dtype=np.int64)
    order = np.lexsort((-best, lab.labels))
    first = np.searchsorted(lab.labels[order], np.arange(ncomp))
    top = order[first]
    diam[:] = best[top]
    wa = best_a[top].astype(np.int64)
    wb = best_b[top].astype(np.int64)

    core = np.flatnonzero(alive)
    if core.size == 0:
        return diam, wa, wb, 0
    ncore = core.size
    new_id = np.full(g.n, -1, dtype=np.int64)
    new_id[core] = np.arange(ncore)
    u, v = g.edges()
    keep = alive[u] & alive[v]
    cu, cv = new_id[u[keep]], new_id[v[keep]]
    h = height[core]
    roots = np.flatnonzero(h > 0)
    plen = h[roots]
    total = int(plen.sum())
    # path vertices get ids ncore.. in blocks; position 1..h along the path
    offs = np.zeros(roots.size + 1, dtype=np.int64)
    np.cumsum(plen, out=offs[1:])
    owner = np.repeat(roots, plen)
    pos = np.arange(total) - np.repeat(offs[:-1], plen) + 1
    pid = ncore + np.arange(total)
    prev = np.where(pos == 1, owner, pid - 1)
    red = Graph.from_edges(ncore + total, np.concatenate([cu, prev]),
                           np.concatenate([cv, pid]), check=False)
    rlab = components(red)
    rorder, rstart = component_order(rlab)
    rd, ra, rb, nbfs = K.diameter_all(red.indptr, red.indices, rorder, rstart, threshold,
                                      True, False, _batch_words(red))
    # reduced component -> original component, via any core vertex in it
    comp_of = lab.labels[core[rorder[rstart[:-1]]]]
    path_owner = core[owner]
    path_deep = deep[path_owner]
    path_pos = pos

    def lift(x):
        if x < ncore:
            return int(core[x])
        j = x - ncore
        # walk up from the deepest vertex to depth path_pos[j]
        w = int(path_deep[j])
        for _ in range(int(height[path_owner[j]] - path_pos[j])):
            w = int(parent[w])
        return w

    for c, d, a, b in zip(comp_of.tolist(), rd.tolist(), ra.tolist(), rb.tolist()):
        if d > diam[c]:
            diam[c] = d
            wa[c] = lift(a)
            wb[c] = lift(b)
    return diam, wa, wb, nbfs
