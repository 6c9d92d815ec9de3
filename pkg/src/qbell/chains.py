"""Chained sequences: cyclic event lists with adjacent local orthogonality.

A chained sequence is a cyclic list of elements (each a nonempty event set,
all events of one element sharing a setting) where adjacent elements are
pairwise locally orthogonal across all sub-events; a pair is *saturated* on a
box when its probabilities sum to one.  The canonical composite sequences on
the k-outcome PR box have five elements, with elements 2 and 4 being
(k-1)x(k-1) blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .boxes import FLOAT_TOL, RATIONAL, BellScenario, Box, locally_orthogonal

SEARCH_NODE_CAP = 2 * 10**6

# the four settings in cyclic order around the input square; consecutive
# settings share exactly one party's input
_SETTING_CYCLE = ((0, 0), (0, 1), (1, 1), (1, 0))


@dataclass(frozen=True)
class ChainedSequence:
    """Elements as tuples of flat event indices plus per-pair saturation flags.

    Pair i couples element i and element i+1 (cyclically); ``saturated[i]``
    records whether that pair's probabilities summed to one on the box the
    sequence was found on.
    """

    scenario: BellScenario
    elements: tuple
    saturated: tuple

    @property
    def length(self) -> int:
        return len(self.elements)

    def pairs(self):
        n = len(self.elements)
        return [(i, (i + 1) % n) for i in range(n)]

    def element_sum(self, box: Box, i: int):
        return sum(box.probs[e] for e in self.elements[i])

    def pair_sums(self, box: Box):
        n = len(self.elements)
        sums = [self.element_sum(box, i) for i in range(n)]
        return [sums[i] + sums[(i + 1) % n] for i in range(n)]

    def unsaturated_pairs(self) -> tuple:
        return tuple(i for i, s in enumerate(self.saturated) if not s)


def is_chained(scenario: BellScenario, elements) -> bool:
    """Adjacent elements pairwise locally orthogonal across all sub-events."""
    n = len(elements)
    evs = [[scenario.unflat(e) for e in el] for el in elements]
    for i in range(n):
        group = evs[i] + evs[(i + 1) % n]
        for p in range(len(group)):
            for q in range(p + 1, len(group)):
                if group[p] != group[q] and not locally_orthogonal(group[p], group[q]):
                    return False
    return True


def saturation_flags(scenario: BellScenario, elements, box: Box, tol=None):
    if tol is None:
        tol = 0 if box.mode == RATIONAL else FLOAT_TOL
    n = len(elements)
    sums = [sum(box.probs[e] for e in el) for el in elements]
    return tuple(abs(sums[i] + sums[(i + 1) % n] - 1) <= tol for i in range(n))


def with_flags(scenario: BellScenario, elements, box: Box, tol=None) -> ChainedSequence:
    return ChainedSequence(scenario, tuple(tuple(el) for el in elements),
                           saturation_flags(scenario, elements, box, tol))


def _shared_party(s1, s2):
    if s1[0] == s2[0]:
        return "A"
    if s1[1] == s2[1]:
        return "B"
    raise ValueError(f"settings {s1}, {s2} share no input")


def _support_event(k, setting, a):
    """The PR-support event of the setting with Alice output a."""
    x, y = setting
    return (a, (a + x * y) % k)


@lru_cache(maxsize=None)
def canonical_placements(k: int):
    """All canonical five-element placements on PR^(k), plain and extended.

    A placement is fixed by a cyclic route over the four settings (8 choices)
    and the anchor output of element 1 (k choices).  Elements 2 and 4 are the
    (k-1)x(k-1) blocks; the extended variant widens element 2 to the full
    complement of element 1's row (or column), which re-saturates the pairs
    broken by events in that strip.  Returns tuples
    (elements, extended_flag), deterministically ordered.
    """
    sc = BellScenario(2, 2, k, k)
    placements = []
    for start in range(4):
        for step in (1, -1):
            route = tuple(_SETTING_CYCLE[(start + step * i) % 4] for i in range(4))
            for t in range(k):
                for extended in (False, True):
                    elements = _build_placement(sc, k, route, t, extended)
                    placements.append((tuple(tuple(sorted(el)) for el in elements),
                                       extended))
    return tuple(placements)


def _build_placement(sc, k, route, t, extended):
    s1, s3, s4, s5 = route
    share13 = _shared_party(s1, s3)
    share34 = _shared_party(s3, s4)
    share45 = _shared_party(s4, s5)
    share51 = _shared_party(s5, s1)

    a1, b1 = _support_event(k, s1, t)
    p1 = [(s1[0], s1[1], a1, b1)]

    if extended:
        # widen along the party shared with element 3; orthogonality to both
        # neighbors of element 2 survives
        if share13 == "A":
            p2 = [(s1[0], s1[1], a, b) for a in range(k) for b in range(k) if a != a1]
        else:
            p2 = [(s1[0], s1[1], a, b) for a in range(k) for b in range(k) if b != b1]
    else:
        p2 = [(s1[0], s1[1], a, b) for a in range(k) for b in range(k)
              if a != a1 and b != b1]

    if share13 == "A":
        a3 = a1
        b3 = (a3 + s3[0] * s3[1]) % k
    else:
        b3 = b1
        a3 = (b3 - s3[0] * s3[1]) % k
    p3 = [(s3[0], s3[1], a3, b3)]

    # element 4 excludes element 3's output on the party shared with setting 3
    # and element 5's output on the party shared with setting 5; for the block
    # to keep k-1 support events both exclusions must hit the same support
    # event of setting 4, which pins element 5.
    o3 = a3 if share34 == "A" else b3
    w4 = s4[0] * s4[1]
    if share34 == "A":
        star = (o3, (o3 + w4) % k)
    else:
        star = ((o3 - w4) % k, o3)
    o5 = star[0] if share45 == "A" else star[1]
    if share45 == "A":
        a5, b5 = _support_event(k, s5, o5)
    else:
        a5, b5 = _support_event_bob(k, s5, o5)
    p5 = [(s5[0], s5[1], a5, b5)]
    # the element-5/element-1 pair must be orthogonal via their shared input
    if share51 == "A":
        assert a5 != a1, "degenerate placement"
    else:
        assert b5 != b1, "degenerate placement"

    p4 = [
        (s4[0], s4[1], a, b)
        for a in range(k)
        for b in range(k)
        if (a if share34 == "A" else b) != o3 and (a if share45 == "A" else b) != o5
    ]

    flats = [tuple(sc.flat(*e) for e in el) for el in (p1, p2, p3, p4, p5)]
    return flats


def _support_event_bob(k, setting, b):
    """The PR-support event of the setting with Bob output b."""
    x, y = setting
    return ((b - x * y) % k, b)


def find_chained_sequence(box: Box, length: int = 5, mode: str = "saturated",
                          n_unsaturated: int | None = None, tol=None,
                          node_cap: int = SEARCH_NODE_CAP):
    """Search the box for a chained sequence.

    ``mode``:
      * ``"saturated"`` - exhaustive cycle search over single events with all
        adjacent pairs saturated;
      * ``"unsaturated"`` - same but exactly ``n_unsaturated`` pairs below one;
      * ``"composite"`` - scan the canonical composite placements on PR^(k)
        (the scenario must be (2,2,k)) and return the one with the fewest
        unsaturated pairs.

    Returns a :class:`ChainedSequence` or ``None``.  Deterministic: events
    are explored in flat order, placements in their canonical order.
    """
    if length < 3:
        raise ValueError("length >= 3 required")
    sc = box.scenario
    if tol is None:
        tol = 0 if box.mode == RATIONAL else FLOAT_TOL

    if mode == "composite":
        if (sc.ma, sc.mb) != (2, 2) or sc.ka != sc.kb:
            raise ValueError("composite mode expects a (2,2,k) scenario")
        best = None
        for elements, _extended in canonical_placements(sc.ka):
            seq = with_flags(sc, elements, box, tol)
            n_unsat = len(seq.unsaturated_pairs())
            if best is None or n_unsat < best[0]:
                best = (n_unsat, seq)
        return best[1] if best else None

    if mode == "saturated":
        target = 0
    elif mode == "unsaturated":
        if n_unsaturated is None:
            raise ValueError("unsaturated mode needs n_unsaturated")
        target = n_unsaturated
    else:
        raise ValueError(f"unknown mode {mode!r}")

    events = [sc.unflat(i) for i in range(sc.n_events)]
    probs = box.probs
    budget = [node_cap]

    def pair_ok(i, j):
        s = probs[i] + probs[j]
        if abs(s - 1) <= tol:
            return True  # saturated
        if s < 1:
            return None  # unsaturated
        return False  # sums above one never form a valid pair

    def dfs(path, unsat):
        budget[0] -= 1
        if budget[0] < 0:
            raise ValueError("chained-sequence search cap exceeded")
        if len(path) == length:
            closing = pair_ok(path[-1], path[0])
            if closing is False:
                return None
            total = unsat + (closing is None)
            if total == target and locally_orthogonal(events[path[-1]], events[path[0]]):
                return list(path)
            return None
        last = path[-1]
        for nxt in range(sc.n_events):
            if nxt in path:
                continue
            # only search cycles whose smallest vertex is the start
            if nxt < path[0]:
                continue
            if not locally_orthogonal(events[last], events[nxt]):
                continue
            ok = pair_ok(last, nxt)
            if ok is False:
                continue
            extra = unsat + (ok is None)
            if extra > target:
                continue
            hit = dfs(path + [nxt], extra)
            if hit:
                return hit
        return None

    for start in range(sc.n_events):
        hit = dfs([start], 0)
        if hit:
            elements = tuple((i,) for i in hit)
            return with_flags(sc, elements, box, tol)
    return None
