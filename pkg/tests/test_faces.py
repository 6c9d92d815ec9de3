import random
from fractions import Fraction
from itertools import combinations

import pytest

from qbell.boxes import (
    BellScenario,
    enumerate_local_deterministic,
    mix,
    pr_box,
    uniform_box,
    validate_no_signaling,
)
from qbell.faces import (
    FaceSpec,
    face_box,
    face_dimension,
    face_spec_from_json,
    face_spec_to_json,
    local_membership,
    pr_neighbors,
)

SC222 = BellScenario(2, 2, 2, 2)


def _winning_count(box, k):
    sc = box.scenario
    count = 0
    for x in (0, 1):
        for y in (0, 1):
            won = sum(box.probs[sc.flat(x, y, a, b)]
                      for a in range(k) for b in range(k)
                      if (b - a) % k == x * y)
            if won == 1:
                count += 1
    return count


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_neighbor_count_is_4k(k):
    nbrs = pr_neighbors(k)
    assert len(nbrs) == 4 * k
    for box in nbrs:
        assert _winning_count(box, k) == 3
        ok, _ = validate_no_signaling(box)
        assert ok


def test_neighbors_are_deterministic_and_distinct():
    nbrs = pr_neighbors(2)
    assert len({n.probs for n in nbrs}) == 8
    dets = {b.probs for b in enumerate_local_deterministic(SC222)}
    assert all(n.probs in dets for n in nbrs)


def test_face_spec_validation():
    with pytest.raises(ValueError):
        FaceSpec(2, (0, 1), (Fraction(1, 2), Fraction(1, 2)))  # missing weight
    with pytest.raises(ValueError):
        FaceSpec(2, (0, 0), (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))
    with pytest.raises(ValueError):
        FaceSpec(2, (0,), (Fraction(0), Fraction(1)))  # c_NS must be > 0
    spec = FaceSpec(2, (0, 3), (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)))
    assert spec.c_ns == Fraction(1, 2)
    assert spec.dimension == 2


def test_face_spec_json_round_trip():
    spec = FaceSpec(3, (0, 5, 7), tuple(Fraction(1, 4) for _ in range(4)))
    again = face_spec_from_json(face_spec_to_json(spec))
    assert again == spec


def test_face_box_degenerate_is_pr():
    spec = FaceSpec(2, (), (Fraction(1),))
    assert face_box(spec) == pr_box(2)


def test_face_box_one_neighbor_breaks_one_pair():
    from qbell.chains import canonical_placements, saturation_flags

    nbrs = pr_neighbors(2)
    spec = FaceSpec(2, (0,), (Fraction(7, 10), Fraction(3, 10)))
    box = face_box(spec, nbrs)
    patterns = set()
    for elements, extended in canonical_placements(2):
        if extended:
            continue
        flags = saturation_flags(SC222, elements, box)
        broken = tuple(i for i, s in enumerate(flags) if not s)
        patterns.add(broken)
        if len(broken) == 1:
            i = broken[0]
            sums = [sum(box.probs[e] for e in el) for el in elements]
            assert sums[i] + sums[(i + 1) % 5] == Fraction(7, 10)
    # exactly one broken pair under the canonical chain orientations
    assert min(len(p) for p in patterns) == 1


def test_face_box_full_mixture_interior():
    nbrs = pr_neighbors(2)
    weights = (Fraction(1, 9),) * 9
    spec = FaceSpec(2, tuple(range(8)), weights)
    box = face_box(spec, nbrs)
    ok, _ = validate_no_signaling(box)
    assert ok
    assert all(p > 0 for p in box.probs)


def test_face_dimension_examples():
    assert face_dimension(FaceSpec(2, (), (Fraction(1),))) == 0
    full2 = FaceSpec(2, tuple(range(8)), (Fraction(1, 9),) * 9)
    assert face_dimension(full2) == 8
    full3 = FaceSpec(3, tuple(range(12)), (Fraction(1, 13),) * 13)
    assert face_dimension(full3) == 12


def test_face_dimension_equals_cardinality():
    rng = random.Random(17)
    nbrs = pr_neighbors(2)
    for _ in range(12):
        d = rng.randint(1, 8)
        subset = tuple(sorted(rng.sample(range(8), d)))
        weights = (Fraction(1, 2),) + tuple(
            Fraction(1, 2 * d) for _ in range(d))
        spec = FaceSpec(2, subset, weights)
        assert face_dimension(spec, nbrs) == d


def test_local_membership_uniform_inside():
    verts = enumerate_local_deterministic(SC222)
    res = local_membership(uniform_box(SC222), verts)
    assert res.inside
    rebuilt = mix(verts, res.weights)
    assert rebuilt == uniform_box(SC222)


def test_local_membership_pr_outside():
    verts = enumerate_local_deterministic(SC222)
    res = local_membership(pr_box(2), verts)
    assert not res.inside
    assert res.separating is not None


def test_local_membership_recovers_mixture():
    verts = enumerate_local_deterministic(SC222)
    rng = random.Random(3)
    for _ in range(5):
        raw = [Fraction(rng.randint(0, 6)) for _ in verts]
        total = sum(raw)
        if total == 0:
            continue
        weights = [r / total for r in raw]
        box = mix(verts, weights)
        res = local_membership(box, verts)
        assert res.inside
        assert mix(verts, res.weights) == box


def test_neighbor_pair_not_reproducible_by_others():
    # a uniform mixture of two neighbors cannot be written as a convex
    # combination of PR and the remaining six neighbors
    nbrs = pr_neighbors(2)
    target = mix([nbrs[0], nbrs[1]], [Fraction(1, 2), Fraction(1, 2)])
    others = [pr_box(2)] + nbrs[2:]
    res = local_membership(target, others)
    assert not res.inside


def test_nonlocal_faces_outside_local_polytope():
    nbrs = pr_neighbors(2)
    verts = enumerate_local_deterministic(SC222)
    for subset in list(combinations(range(8), 2))[:6]:
        spec = FaceSpec(2, subset,
                        (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)))
        res = local_membership(face_box(spec, nbrs), verts)
        assert not res.inside


def test_local_membership_empty_vertices():
    with pytest.raises(ValueError):
        local_membership(pr_box(2), [])
