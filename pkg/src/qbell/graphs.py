"""Orthogonality graph of a Bell scenario and maximal-clique enumeration."""

from __future__ import annotations

from dataclasses import dataclass

from .boxes import BellScenario, locally_orthogonal

CLIQUE_VERTEX_CAP = 64


@dataclass(frozen=True)
class OrthogonalityGraph:
    """Events as vertices; edges between locally orthogonal events."""

    scenario: BellScenario
    neighbors: tuple  # tuple of frozensets, indexed by flat event index

    @property
    def n(self) -> int:
        return len(self.neighbors)

    def adjacent(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]


def build_orthogonality_graph(scenario: BellScenario) -> OrthogonalityGraph:
    events = [scenario.unflat(i) for i in range(scenario.n_events)]
    neighbors = tuple(
        frozenset(
            j for j, f in enumerate(events)
            if j != i and locally_orthogonal(e, f)
        )
        for i, e in enumerate(events)
    )
    return OrthogonalityGraph(scenario, neighbors)


def maximal_cliques(graph: OrthogonalityGraph, cap=CLIQUE_VERTEX_CAP):
    """All maximal cliques by Bron-Kerbosch with pivoting."""
    if graph.n > cap:
        raise ValueError(f"{graph.n} vertices exceeds clique cap {cap}")
    nbrs = graph.neighbors
    out = []

    def expand(clique, candidates, excluded):
        if not candidates and not excluded:
            out.append(frozenset(clique))
            return
        pivot = max(candidates | excluded, key=lambda v: len(nbrs[v] & candidates))
        for v in sorted(candidates - nbrs[pivot]):
            expand(clique | {v}, candidates & nbrs[v], excluded & nbrs[v])
            candidates = candidates - {v}
            excluded = excluded | {v}

    expand(frozenset(), frozenset(range(graph.n)), frozenset())
    return out


def maximum_cliques(graph: OrthogonalityGraph, cap=CLIQUE_VERTEX_CAP):
    cliques = maximal_cliques(graph, cap)
    size = max(len(c) for c in cliques)
    return [c for c in cliques if len(c) == size]
