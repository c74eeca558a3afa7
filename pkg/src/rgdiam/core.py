"""2-core, kernel and the trees hanging off the 2-core."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import Graph


@dataclass(frozen=True)
class TwoCore:
    """Maximal subgraph of minimum degree 2.

    ``graph`` is the induced subgraph on the members, relabelled so that
    its vertex ``i`` is ``ids[i]`` in the parent graph.
    """

    member: np.ndarray
    graph: Graph
    ids: np.ndarray

    @property
    def n(self) -> int:
        return int(self.ids.size)

    @property
    def m(self) -> int:
        return self.graph.m


@dataclass(frozen=True)
class Kernel:
    """Multigraph left after suppressing the degree-2 vertices of a 2-core.

    Edge ``k`` joins ``a[k]`` and ``b[k]`` (parent-graph ids; ``a == b``
    for a loop) and stands for a chain of ``length[k]`` core edges.
    Cycles of the core with no vertex of degree 3 or more are not part of
    the multigraph; their lengths are in ``cycles``.
    """

    vertices: np.ndarray
    a: np.ndarray
    b: np.ndarray
    length: np.ndarray
    cycles: np.ndarray

    @property
    def n(self) -> int:
        return int(self.vertices.size)

    @property
    def m(self) -> int:
        return int(self.a.size)

    @property
    def isolated_cycles(self) -> int:
        return int(self.cycles.size)

    def degrees(self) -> dict[int, int]:
        """Multigraph degree of each kernel vertex; a loop counts twice."""
        deg = np.bincount(np.concatenate([self.a, self.b]))
        return {int(v): int(deg[v]) for v in self.vertices}


@dataclass(frozen=True)
class AttachedTree:
    root: int
    size: int
    height: int


def two_core(g: Graph) -> TwoCore:
    """Peel vertices of degree at most 1 until none are left."""
    member = K.peel_two_core(g.indptr, g.indices)
    sub, ids = g.subgraph(np.flatnonzero(member))
    member.setflags(write=False)
    return TwoCore(member, sub, ids)


def kernel(core: TwoCore) -> Kernel:
    """Contract every maximal chain of core-degree-2 vertices into one
    edge.  Works on the core's own graph, so the result does not depend on
    the rest of the parent graph."""
    cg = core.graph
    a, b, length, cycles = K.kernel_chains(cg.indptr, cg.indices,
                                           np.ones(cg.n, dtype=np.bool_))
    deg = cg.degrees()
    verts = np.flatnonzero(deg >= 3)
    return Kernel(core.ids[verts], core.ids[a], core.ids[b], length, cycles)


def _tree_roots(member: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Core vertex each vertex hangs from; core vertices map to themselves
    and vertices of tree components to -1.  Pointer jumping, O(n log h)."""
    n = member.size
    up = np.where(member, np.arange(n), parent)
    while True:
        ok = up >= 0
        nxt = up.copy()
        nxt[ok] = up[up[ok]]
        if np.array_equal(nxt, up):
            return up
        up = nxt


def attached_trees(g: Graph, core: TwoCore) -> list[AttachedTree]:
    """One tree per core vertex that has non-core vertices hanging from it,
    in increasing root order.  ``size`` counts the non-core vertices,
    ``height`` is the largest distance from the root."""
    alive, parent, height, *_ = K.peel_forest(g.indptr, g.indices)
    if not np.array_equal(alive, core.member):
        raise ValueError("core does not belong to this graph")
    roots = _tree_roots(alive, parent)
    hanging = (~alive) & (roots >= 0)
    size = np.bincount(roots[hanging], minlength=g.n)
    rs = np.flatnonzero(size)
    return [AttachedTree(int(r), int(size[r]), int(height[r])) for r in rs]


def tree_height_histogram(trees: list[AttachedTree]) -> list[int]:
    if not trees:
        return []
    return np.bincount([t.height for t in trees]).tolist()
