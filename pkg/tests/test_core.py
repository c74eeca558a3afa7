import math

import networkx as nx
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rgdiam.bp_numerics import dual_parameter
from rgdiam.core import attached_trees, kernel, two_core
from rgdiam.graph import Graph, sample_gnp


def from_nx(G):
    return Graph.from_networkx(nx.convert_node_labels_to_integers(G, ordering="sorted"))


def cycle_with_tail(k=5, tail=3):
    G = nx.cycle_graph(k)
    nx.add_path(G, [0] + list(range(k, k + tail)))
    return from_nx(G)


def theta(lengths=(2, 3, 4)):
    G = nx.Graph()
    nxt = 2
    for L in lengths:
        path = [0] + list(range(nxt, nxt + L - 1)) + [1]
        nxt += L - 1
        nx.add_path(G, path)
    return from_nx(G)


def test_tree_has_empty_core():
    g = from_nx(nx.random_labeled_tree(40, seed=1))
    assert two_core(g).n == 0
    assert kernel(two_core(g)).n == 0


def test_cycle_with_pendant_path():
    g = cycle_with_tail()
    core = two_core(g)
    assert core.ids.tolist() == [0, 1, 2, 3, 4] and core.m == 5
    k = kernel(core)
    assert k.n == 0 and k.cycles.tolist() == [5]
    trees = attached_trees(g, core)
    assert len(trees) == 1
    t = trees[0]
    assert (t.root, t.size, t.height) == (0, 3, 3)


def test_pure_cycle_kernel():
    k = kernel(two_core(from_nx(nx.cycle_graph(7))))
    assert k.n == 0 and k.m == 0 and k.isolated_cycles == 1 and k.cycles.tolist() == [7]


def test_theta_graph_kernel():
    g = theta()
    k = kernel(two_core(g))
    assert sorted(k.vertices.tolist()) == [0, 1]
    assert k.m == 3
    assert sorted(k.length.tolist()) == [2, 3, 4]
    assert k.degrees() == {0: 3, 1: 3}


def test_core_is_whole_graph():
    g = from_nx(nx.complete_graph(5))
    core = two_core(g)
    assert core.n == 5 and attached_trees(g, core) == []


def test_loop_in_kernel():
    # a cycle hanging off a theta vertex becomes a loop
    G = nx.cycle_graph(4)
    G.add_edge(0, 2)
    nx.add_cycle(G, [0, 10, 11])
    k = kernel(two_core(from_nx(G)))
    loops = (k.a == k.b).sum()
    assert loops == 1
    assert k.degrees()[0] == 5


@given(st.integers(1, 80), st.floats(0.5, 3.0), st.integers(0, 2**31))
@settings(max_examples=80, deadline=None)
def test_core_structure_properties(n, lam, seed):
    if lam > n:
        lam = float(n)
    g = sample_gnp(n, lam, seed)
    core = two_core(g)
    G = g.to_networkx()
    assert set(core.ids.tolist()) == set(nx.k_core(G, 2).nodes())
    # idempotence
    again = two_core(core.graph)
    assert again.n == core.n and again.graph == core.graph
    # kernel Euler check
    k = kernel(core)
    assert core.m == int(k.length.sum()) + int(k.cycles.sum())
    degs = k.degrees()
    cdeg = core.graph.degrees()
    for v, d in degs.items():
        assert d == cdeg[np.searchsorted(core.ids, v)] >= 3
    # partition of non-core vertices hanging off the core
    trees = attached_trees(g, core)
    hanging = 0
    member = core.member
    for comp in nx.connected_components(G):
        if any(member[v] for v in comp):
            hanging += sum(1 for v in comp if not member[v])
    assert sum(t.size for t in trees) == hanging
    assert all(member[t.root] for t in trees)
    H = G.copy()
    H.remove_edges_from(core.graph.to_networkx().edges() and
                        [(int(core.ids[a]), int(core.ids[b]))
                         for a, b in core.graph.to_networkx().edges()])
    for t in trees:
        comp = nx.node_connected_component(H, t.root)
        assert len(comp) == t.size + 1
        assert max(nx.single_source_shortest_path_length(H, t.root).values()) == t.height


def test_tree_height_scale():
    n = 10**5
    g = sample_gnp(n, 2.0, 3)
    h = max(t.height for t in attached_trees(g, two_core(g)))
    ref = math.log(n) / math.log(1 / dual_parameter(2.0))
    assert 0.6 <= h / ref <= 1.4
