import random
from fractions import Fraction
from itertools import combinations

import pytest

from qbell.boxes import (
    BellScenario,
    box_of_correlators,
    enumerate_local_deterministic,
    mix,
    pr_box,
    uniform_box,
)
from qbell.certificates import (
    DEFAULT_EPS,
    CertificateMatrix,
    build_certificate,
    build_ring_certificate,
    certificate_from_json_dict,
    certificate_to_json_dict,
    certificate_value,
    exclude_by_analytic,
    is_valid_certificate,
    ring_sequence,
)
from qbell.chains import canonical_placements, find_chained_sequence, with_flags
from qbell.faces import FaceSpec, face_box, pr_neighbors
from qbell.graphs import build_orthogonality_graph
from qbell.ratlinalg import is_psd_rational

SC222 = BellScenario(2, 2, 2, 2)
G222 = build_orthogonality_graph(SC222)


def canonical_sequence(box):
    seq = find_chained_sequence(box, 5, "saturated")
    if seq is None:
        elements, _ = canonical_placements(box.scenario.ka)[0]
        seq = with_flags(box.scenario, elements, box)
    return seq


def elem_sums(seq, box):
    return [seq.element_sum(box, i) for i in range(seq.length)]


# --- closed forms of the template values (oracles used by the acceptance
# suite as well); p[0..4] are the element sums, c the PR weight, k outcomes.

def value_m0(p, eps=DEFAULT_EPS):
    return -eps * p[0] * (p[0] - 1)


def value_m1(p):
    return 2 * p[0] * p[4]


def value_m21(p, c, k):
    return c * c * (p[0] ** 2 - p[0] + p[3] ** 2 - p[3] + 2 * p[4] ** 2 - 2 * p[4]) \
        + 2 * k * c * (p[0] * p[4] + p[3] * p[4])


def value_m22(p, c, k):
    return c * c * (p[0] ** 2 - p[0] + p[2] ** 2 - p[2]
                    + p[3] ** 2 - p[3] + p[4] ** 2 - p[4]) \
        + 2 * k * c * (p[2] * p[3] + p[0] * p[4])


def value_m31(p, c, k):
    half = Fraction(k, 2) if isinstance(c, Fraction) else k / 2
    return half * c * (p[0] ** 2 - p[0] + p[2] ** 2 - p[2]
                       + 2 * p[3] ** 2 - 2 * p[3] + 2 * p[4] ** 2 - 2 * p[4]) \
        + c * c * (p[3] ** 2 - p[3] + p[4] ** 2 - p[4]) \
        + 2 * k * c * (p[0] * p[4] + p[2] * p[3] + p[3] * p[4])


def value_m32(p, c, k):
    half = Fraction(k, 2) if isinstance(c, Fraction) else k / 2
    return half * c * (p[1] ** 2 - p[1] + p[3] ** 2 - p[3]
                       + 2 * p[4] ** 2 - 2 * p[4] + 2 * p[0] ** 2 - 2 * p[0]) \
        + c * c * (p[4] ** 2 - p[4] + p[0] ** 2 - p[0]) \
        + 2 * k * c * (p[1] * p[0] + p[3] * p[4] + p[4] * p[0])


CLOSED_FORMS = {
    "M0": lambda p, c, k: value_m0(p),
    "M1": lambda p, c, k: value_m1(p),
    "M21": value_m21,
    "M22": value_m22,
    "M31": value_m31,
    "M32": value_m32,
}


def test_template_m1_matrix_matches_display():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M1", seq)
    expected = [
        [4, 4, 0, 0, 1],
        [4, 8, 4, 0, 0],
        [0, 4, 8, 4, 0],
        [0, 0, 4, 8, 4],
        [1, 0, 0, 4, 4],
    ]
    assert [[int(v) for v in row] for row in cert.entries] == expected


def test_template_m21_matrix_matches_display():
    c = Fraction(1, 3)
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M21", seq, c_ns=c)
    e = cert.entries
    assert [e[i][i] for i in range(5)] == [8 + c * c, 16, 16, 8 + c * c, 2 * c * c]
    assert e[0][4] == e[4][0] == 2 * c
    assert e[3][4] == e[4][3] == 2 * c
    assert e[0][1] == e[1][2] == e[2][3] == 8
    assert e[0][2] == e[0][3] == e[1][3] == e[1][4] == e[2][4] == 0


def test_template_m22_matrix_matches_display():
    # the printed matrix is written in the basis [p3, p2, p1, p4, p5]
    c = Fraction(2, 5)
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M22", seq, c_ns=c)
    perm = (2, 1, 0, 3, 4)
    m = [[cert.entries[perm[i]][perm[j]] for j in range(5)] for i in range(5)]
    expected = [
        [8 + c * c, 8, 0, 2 * c, 0],
        [8, 16, 8, 0, 0],
        [0, 8, 8 + c * c, 0, 2 * c],
        [2 * c, 0, 0, 8 + c * c, 8],
        [0, 0, 2 * c, 8, 8 + c * c],
    ]
    assert m == expected


def test_template_m3_matrix_matches_display():
    c = Fraction(1, 7)
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M3", seq, c_ns=c)  # alias of M31 at k = 2
    e = cert.entries
    assert [e[i][i] for i in range(5)] == \
        [8 + c, 16, 8 + c, 2 * c + c * c, 2 * c + c * c]
    for (i, j) in ((0, 4), (2, 3), (3, 4)):
        assert e[i][j] == e[j][i] == 2 * c
    assert e[0][1] == e[1][2] == 8
    assert e[2][4] == e[0][3] == e[0][2] == e[1][3] == e[1][4] == 0


def test_k_family_degenerates_to_binary():
    seq2 = canonical_sequence(pr_box(2))
    assert build_certificate("M1_k", seq2).entries == \
        build_certificate("M1", seq2).entries


def test_m0_requires_positive_eps_and_small_enough():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M0", seq, eps=Fraction(1, 10))
    assert is_valid_certificate(cert, G222)
    big = build_certificate("M0", seq, eps=Fraction(2))
    assert not is_valid_certificate(big, G222)
    with pytest.raises(ValueError):
        build_certificate("M0", seq, eps=Fraction(-1))


def test_certificate_value_on_pr_is_eps_quarter():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M0", seq, eps=Fraction(1, 10))
    assert certificate_value(cert, pr_box(2)) == Fraction(1, 40)


def test_m1_value_is_2_p1_p5_on_one_faces():
    nbrs = pr_neighbors(2)
    for nid in range(8):
        spec = FaceSpec(2, (nid,), (Fraction(3, 5), Fraction(2, 5)))
        box = face_box(spec, nbrs)
        rep = exclude_by_analytic(box, face=spec, search_relabelings=False)
        assert rep.excluded and rep.template == "M1"
        p = elem_sums(rep.sequence, box)
        assert rep.value == 2 * p[0] * p[4]


def test_validity_checks():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M1", seq)
    assert is_valid_certificate(cert, G222)

    # breaking one entry destroys positive semidefiniteness
    rows = [list(r) for r in cert.entries]
    rows[0][4] = rows[4][0] = Fraction(5)
    bad = CertificateMatrix(cert.events, tuple(tuple(r) for r in rows), cert.mode)
    assert not is_valid_certificate(bad, G222)

    zero = CertificateMatrix(cert.events,
                             tuple(tuple(Fraction(0) for _ in range(5))
                                   for _ in range(5)), "rational")
    assert is_valid_certificate(zero, G222)

    # support outside the orthogonality graph is rejected: events 0 and 1
    # share the setting but only differ in Bob's outcome... use a genuinely
    # non-adjacent pair (0,0|0,0) vs (0,0|0,1): flats 0 and 4
    rows = [[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]]
    off = CertificateMatrix((0, 4), tuple(tuple(r) for r in rows), "rational")
    assert not is_valid_certificate(off, G222)


def test_certificate_value_scaling_and_zero_extension():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M1", seq)
    box = face_box(FaceSpec(2, (0,), (Fraction(1, 2), Fraction(1, 2))),
                   pr_neighbors(2))
    v = certificate_value(cert, box)
    doubled = CertificateMatrix(
        cert.events, tuple(tuple(2 * x for x in row) for row in cert.entries),
        cert.mode)
    assert certificate_value(doubled, box) == 2 * v

    # explicit zero extension to all 16 events gives the same value
    full_events = tuple(range(16))
    idx = {e: i for i, e in enumerate(full_events)}
    big = [[Fraction(0)] * 16 for _ in range(16)]
    for i, ei in enumerate(cert.events):
        for j, ej in enumerate(cert.events):
            big[idx[ei]][idx[ej]] = cert.entries[i][j]
    ext = CertificateMatrix(full_events, tuple(tuple(r) for r in big), "rational")
    assert certificate_value(ext, box) == v


def test_values_nonpositive_on_deterministic_boxes():
    seq = canonical_sequence(pr_box(2))
    certs = [
        build_certificate("M0", seq),
        build_certificate("M1", seq),
        build_certificate("M21", seq, c_ns=Fraction(1, 2)),
        build_certificate("M22", seq, c_ns=Fraction(1, 2)),
        build_certificate("M31", seq, c_ns=Fraction(1, 2)),
    ]
    for det in enumerate_local_deterministic(SC222):
        for cert in certs:
            assert certificate_value(cert, det) <= 0


def test_values_nonpositive_on_random_local_mixtures():
    rng = random.Random(23)
    dets = enumerate_local_deterministic(SC222)
    seq = canonical_sequence(pr_box(2))
    certs = [build_certificate("M1", seq),
             build_certificate("M21", seq, c_ns=Fraction(1, 3)),
             build_certificate("M0", seq)]
    for _ in range(300):
        raw = [Fraction(rng.randint(0, 5)) for _ in dets]
        total = sum(raw)
        if total == 0:
            continue
        box = mix(dets, [r / total for r in raw])
        for cert in certs:
            assert certificate_value(cert, box) <= 0


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_k_family_psd_grid(k):
    elements, _ = canonical_placements(k)[0]
    seq = with_flags(BellScenario(2, 2, k, k), elements, pr_box(k))
    for tenth in range(1, 10):
        c = Fraction(tenth, 10)
        for name in ("M21", "M22", "M31", "M32"):
            cert = build_certificate(name, seq, c_ns=c)
            assert is_psd_rational(cert.entries), (name, k, c)
    assert is_psd_rational(build_certificate("M1", seq).entries)


def test_exclude_pr2_uses_m0():
    rep = exclude_by_analytic(pr_box(2), search_relabelings=False)
    assert rep.excluded
    assert rep.template == "M0"
    assert rep.value == Fraction(1, 40)


def test_exclude_pr3_uses_m1():
    rep = exclude_by_analytic(pr_box(3), search_relabelings=False)
    assert rep.excluded
    assert rep.template == "M1"
    assert rep.value == Fraction(2, 9)


def test_exclude_rejects_non_binary_inputs():
    with pytest.raises(ValueError):
        exclude_by_analytic(uniform_box(BellScenario(3, 2, 2, 2)))


def test_exclude_not_fired_on_local_boxes():
    for det in enumerate_local_deterministic(SC222)[:6]:
        rep = exclude_by_analytic(det)
        assert not rep.excluded
    rep = exclude_by_analytic(uniform_box(SC222))
    assert not rep.excluded


def test_exclude_not_fired_on_tsirelson():
    r = 2**-0.5
    ts = box_of_correlators([[r, r], [r, -r]])
    rep = exclude_by_analytic(ts)
    assert not rep.excluded


def test_three_face_value_matches_closed_form():
    nbrs = pr_neighbors(2)
    # class with three consecutive broken pairs: Case-V-2-style neighbors
    # minus one, weights generic
    spec = FaceSpec(2, (0, 2, 4), (Fraction(1, 2), Fraction(1, 6),
                                   Fraction(1, 6), Fraction(1, 6)))
    box = face_box(spec, nbrs)
    rep = exclude_by_analytic(box, face=spec, search_relabelings=False)
    assert rep.excluded
    p = elem_sums(rep.sequence, box)
    c = spec.c_ns
    assert rep.value == CLOSED_FORMS[rep.template](p, c, 2)
    if rep.template == "M31":
        # sum identity on the three-consecutive class and its simplified form
        assert p[0] + p[3] + p[4] == 1 + c / 2
        assert rep.value == 2 * c * (p[0] + p[3] + p[4]) * (p[0] + p[3] + p[4] - 1) \
            + c * c * (p[3] ** 2 + p[4] ** 2) - c * c * (p[3] + p[4])


def test_all_two_faces_match_closed_forms():
    rng = random.Random(31)
    nbrs = pr_neighbors(2)
    seen = set()
    for subset in combinations(range(8), 2):
        c = Fraction(rng.randint(20, 80), 100)
        w1 = Fraction(rng.randint(10, 90), 100) * (1 - c)
        spec = FaceSpec(2, subset, (c, w1, 1 - c - w1))
        box = face_box(spec, nbrs)
        rep = exclude_by_analytic(box, face=spec, search_relabelings=False)
        assert rep.excluded
        p = elem_sums(rep.sequence, box)
        assert rep.value == CLOSED_FORMS[rep.template](p, c, 2)
        seen.add(rep.template)
    assert {"M21", "M22"} <= seen


def test_ring_certificate_on_diagonal_class():
    nbrs = pr_neighbors(2)
    spec = FaceSpec(2, (0, 1, 6, 7), (Fraction(1, 2), Fraction(1, 16),
                                      Fraction(3, 16), Fraction(2, 16),
                                      Fraction(2, 16)))
    box = face_box(spec, nbrs)
    rep = exclude_by_analytic(box, face=spec, search_relabelings=False)
    assert rep.excluded
    assert rep.template == "M8"
    assert rep.value > 0
    assert is_valid_certificate(rep.certificate, G222)


def test_ring_certificate_psd_and_structure():
    box = face_box(FaceSpec(2, (0, 1, 6, 7), (Fraction(1, 2),) + (Fraction(1, 8),) * 4),
                   pr_neighbors(2))
    seq = ring_sequence(box, 0)
    cert = build_ring_certificate(seq, Fraction(2))
    assert is_psd_rational(cert.entries)
    assert is_valid_certificate(cert, G222)
    # broken-rung coupling is negative, perfect-rung coupling positive
    assert cert.entries[0][4] < 0 < cert.entries[1][5]


def test_certificate_json_round_trip():
    seq = canonical_sequence(pr_box(2))
    cert = build_certificate("M21", seq, c_ns=Fraction(1, 3))
    payload = certificate_to_json_dict(cert)
    again = certificate_from_json_dict(payload)
    assert again == cert


def test_relabeling_search_recovers_relabeled_faces():
    from qbell.boxes import Relabeling, apply_relabeling

    nbrs = pr_neighbors(2)
    spec = FaceSpec(2, (3,), (Fraction(2, 3), Fraction(1, 3)))
    box = face_box(spec, nbrs)
    rel = Relabeling((1, 0), (0, 1), ((0, 1), (1, 0)), ((1, 0), (0, 1)))
    scrambled = apply_relabeling(box, rel)
    rep = exclude_by_analytic(scrambled)
    assert rep.excluded
    assert rep.value > 0
