"""Neighbor structure of the k-outcome PR box and low-dimensional faces of NS(2,2,k).

The PR box's neighbors are the local deterministic boxes winning exactly 3 of
its 4 constraints (b - a) mod k = x*y; a face is a convex mixture of the PR
box with a subset of neighbors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import ratlinalg
from .boxes import (
    RATIONAL,
    BellScenario,
    Box,
    deterministic_box,
    mix,
    parse_scalar,
    pr_box,
)


def _winning_settings(k: int, f, g):
    return [(x, y) for x in (0, 1) for y in (0, 1) if (g[y] - f[x]) % k == x * y]


def pr_neighbors(k: int, mode=RATIONAL) -> list[Box]:
    """Deterministic boxes winning exactly 3 of the 4 PR constraints.

    Ordered by the (x, y, a, b) key of the violated constraint, where (a, b)
    is the box's event at the violated setting.  There are exactly 4k.
    """
    if k < 2:
        raise ValueError("k >= 2 required")
    if k**4 > 10**6:
        raise ValueError("neighbor enumeration cap exceeded")
    sc = BellScenario(2, 2, k, k)
    found = []
    for f in product(range(k), repeat=2):
        for g in product(range(k), repeat=2):
            wins = _winning_settings(k, f, g)
            if len(wins) != 3:
                continue
            (x, y) = next(s for s in product((0, 1), (0, 1)) if s not in wins)
            found.append(((x, y, f[x], g[y]), f, g))
    found.sort(key=lambda t: t[0])
    return [deterministic_box(sc, f, g, mode) for _, f, g in found]


def neighbor_violations(k: int) -> list[tuple]:
    """The (x, y, a, b) violated-constraint key per neighbor id."""
    keys = []
    for f in product(range(k), repeat=2):
        for g in product(range(k), repeat=2):
            wins = _winning_settings(k, f, g)
            if len(wins) == 3:
                (x, y) = next(s for s in product((0, 1), (0, 1)) if s not in wins)
                keys.append((x, y, f[x], g[y]))
    return sorted(keys)


@dataclass(frozen=True)
class FaceSpec:
    """A point on the face spanned by PR^(k) and the chosen neighbors.

    ``weights[0]`` is the PR weight c_NS, followed by one weight per
    neighbor id, all nonnegative and summing to one.
    """

    k: int
    neighbor_ids: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.neighbor_ids) + 1:
            raise ValueError("need one weight for PR plus one per neighbor")
        ws = [Fraction(w) for w in self.weights]
        if any(w < 0 for w in ws) or sum(ws) != 1:
            raise ValueError("weights must be >= 0 and sum to 1")
        if ws[0] <= 0:
            raise ValueError("PR weight c_NS must be > 0")
        ids = self.neighbor_ids
        if len(set(ids)) != len(ids) or any(not 0 <= i < 4 * self.k for i in ids):
            raise ValueError("neighbor ids must be distinct in range(4k)")

    @property
    def c_ns(self) -> Fraction:
        return Fraction(self.weights[0])

    @property
    def dimension(self) -> int:
        return len(self.neighbor_ids)


def face_spec_from_json(text: str) -> FaceSpec:
    payload = json.loads(text)
    return FaceSpec(
        int(payload["k"]),
        tuple(int(i) for i in payload["neighbors"]),
        tuple(Fraction(w) for w in payload["weights"]),
    )


def face_spec_to_json(spec: FaceSpec) -> str:
    return json.dumps({
        "k": spec.k,
        "neighbors": list(spec.neighbor_ids),
        "weights": [f"{Fraction(w).numerator}/{Fraction(w).denominator}" for w in spec.weights],
    })


def face_box(spec: FaceSpec, neighbors=None, mode=RATIONAL) -> Box:
    """The mixture c_NS * PR + sum_i w_i * L_i."""
    if neighbors is None:
        neighbors = pr_neighbors(spec.k, mode)
    chosen = [pr_box(spec.k, mode)] + [neighbors[i] for i in spec.neighbor_ids]
    weights = [parse_scalar(w, mode) for w in spec.weights]
    return mix(chosen, weights)


def face_dimension(spec: FaceSpec, neighbors=None) -> int:
    """Affine dimension of conv({PR} + chosen neighbors): rank of L_i - PR."""
    if neighbors is None:
        neighbors = pr_neighbors(spec.k)
    pr = pr_box(spec.k)
    rows = [
        [neighbors[i].probs[j] - pr.probs[j] for j in range(pr.scenario.n_events)]
        for i in spec.neighbor_ids
    ]
    if not rows:
        return 0
    return ratlinalg.rational_rank(rows)


@dataclass(frozen=True)
class MembershipResult:
    inside: bool
    weights: tuple | None      # convex weights over the vertex list when inside
    separating: tuple | None   # exact Farkas vector over the 17 constraints when outside


def local_membership(box: Box, vertices: list[Box], tol=1e-9) -> MembershipResult:
    """Decide membership in conv(vertices) by exact linear feasibility.

    ``tol`` is only used to round float boxes to rationals first; the
    feasibility decision itself is exact.
    """
    if not vertices:
        raise ValueError("empty vertex list")
    sc = box.scenario

    def rat(v):
        return Fraction(v) if box.mode == RATIONAL else Fraction(v).limit_denominator(
            int(1 / tol))

    n = sc.n_events
    a_rows = [[Fraction(vert.probs[i]) for vert in vertices] for i in range(n)]
    a_rows.append([Fraction(1)] * len(vertices))
    b_col = [rat(box.probs[i]) for i in range(n)] + [Fraction(1)]
    try:
        lam = ratlinalg.solve_feasibility(a_rows, b_col)
    except ratlinalg.Infeasible as exc:
        return MembershipResult(False, None, tuple(exc.farkas))
    return MembershipResult(True, tuple(lam), None)
