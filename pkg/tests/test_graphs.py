import pytest

from qbell.boxes import BellScenario
from qbell.graphs import (
    OrthogonalityGraph,
    build_orthogonality_graph,
    maximal_cliques,
    maximum_cliques,
)

SC222 = BellScenario(2, 2, 2, 2)


def test_vertex_counts():
    assert build_orthogonality_graph(SC222).n == 16
    assert build_orthogonality_graph(BellScenario(2, 2, 3, 3)).n == 36


def test_adjacency_definition_unrolled():
    g = build_orthogonality_graph(SC222)
    v = SC222.flat(0, 0, 0, 0)
    # neighbors via Alice: same x = 0, output 1, anything on Bob's side
    alice_side = {SC222.flat(0, y, 1, b) for y in (0, 1) for b in (0, 1)}
    # neighbors via Bob: same y = 0, output 1, anything on Alice's side
    bob_side = {SC222.flat(x, 0, a, 1) for x in (0, 1) for a in (0, 1)}
    assert g.neighbors[v] == frozenset(alice_side | bob_side)


def test_all_degrees_seven():
    # |via Alice| = 4, |via Bob| = 4, overlap 1 for binary outcomes
    g = build_orthogonality_graph(SC222)
    assert {len(nb) for nb in g.neighbors} == {7}


def test_setting_block_is_clique():
    g = build_orthogonality_graph(SC222)
    block = [SC222.flat(0, 0, a, b) for a in (0, 1) for b in (0, 1)]
    for i in block:
        for j in block:
            if i != j:
                assert g.adjacent(i, j)


def test_maximum_clique_size_four():
    g = build_orthogonality_graph(SC222)
    assert max(len(c) for c in maximal_cliques(g)) == 4
    assert all(len(c) == 4 for c in maximum_cliques(g))


def test_complete_graph_single_maximal_clique():
    sc = SC222  # scenario only carries the labels here
    nbrs = tuple(frozenset(set(range(4)) - {i}) for i in range(4))
    k4 = OrthogonalityGraph(sc, nbrs)
    cliques = maximal_cliques(k4)
    assert cliques == [frozenset(range(4))]


def test_cap():
    with pytest.raises(ValueError):
        maximal_cliques(build_orthogonality_graph(BellScenario(2, 2, 4, 4)), cap=32)
