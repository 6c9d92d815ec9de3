"""Theta-body exclusion certificates for no-signaling boxes.

A certificate is a symmetric PSD matrix M supported on the orthogonality
graph (off-diagonal entries only between locally orthogonal events); the
witness value <P|M|P> - sum_i M_ii P_i is nonpositive on every box in the
theta body, so a strictly positive value excludes a box from the quantum set.

The analytic template family lives on the canonical five-element chained
sequences of PR^(k): edge terms with a large coefficient on the saturated
pairs, small corner terms on the broken pairs, and diagonal corrections.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .boxes import (
    FLOAT,
    FLOAT_TOL,
    RATIONAL,
    Box,
    Relabeling,
    all_relabelings,
    apply_relabeling,
    locally_orthogonal,
)
from .chains import ChainedSequence, canonical_placements, with_flags
from .graphs import OrthogonalityGraph
from .ratlinalg import is_psd_rational

DEFAULT_EPS = Fraction(1, 10)


@dataclass(frozen=True)
class CertificateMatrix:
    """Symmetric matrix over a declared event subset, zero-extended to all events."""

    events: tuple          # flat event indices, the declared subset V'
    entries: tuple         # |V'| x |V'| symmetric rows
    mode: str

    @property
    def size(self) -> int:
        return len(self.events)

    def __post_init__(self):
        n = len(self.events)
        if len(set(self.events)) != n:
            raise ValueError("duplicate events in certificate support")
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise ValueError("entries must be square over the event subset")
        for i in range(n):
            for j in range(i):
                if self.entries[i][j] != self.entries[j][i]:
                    raise ValueError("certificate matrix must be symmetric")


def certificate_value(cert: CertificateMatrix, box: Box):
    """<P|M|P> - sum_i M_ii P_i, restricted to the certificate's support."""
    n_events = box.scenario.n_events
    if any(not 0 <= e < n_events for e in cert.events):
        raise ValueError("certificate events outside the scenario")
    if cert.mode == RATIONAL and box.mode == RATIONAL:
        p = [box.probs[e] for e in cert.events]
        m = cert.entries
    else:
        p = [float(box.probs[e]) for e in cert.events]
        m = [[float(v) for v in row] for row in cert.entries]
    n = len(p)
    quad = sum(m[i][j] * p[i] * p[j] for i in range(n) for j in range(n))
    lin = sum(m[i][i] * p[i] for i in range(n))
    return quad - lin


def is_valid_certificate(cert: CertificateMatrix, graph: OrthogonalityGraph,
                         tol: float = FLOAT_TOL) -> bool:
    """Support restricted to the orthogonality graph and M >= 0.

    PSD is decided exactly by pivoted LDL^T in rational mode, by a minimum
    eigenvalue >= -tol in float mode.
    """
    n = cert.size
    for i in range(n):
        for j in range(i + 1, n):
            if cert.entries[i][j] != 0 and not graph.adjacent(cert.events[i],
                                                              cert.events[j]):
                return False
    if cert.mode == RATIONAL:
        return is_psd_rational(cert.entries)
    m = np.array(cert.entries, dtype=float)
    return float(np.linalg.eigvalsh(m).min()) >= -tol


def certificate_to_json_dict(cert: CertificateMatrix) -> dict:
    entries = []
    for i in range(cert.size):
        for j in range(i, cert.size):
            v = cert.entries[i][j]
            if v != 0:
                if cert.mode == RATIONAL:
                    f = Fraction(v)
                    entries.append([i, j, f"{f.numerator}/{f.denominator}"])
                else:
                    entries.append([i, j, float(v)])
    return {"events": list(cert.events), "entries": entries}


def certificate_from_json_dict(payload: dict, mode=RATIONAL) -> CertificateMatrix:
    events = tuple(int(e) for e in payload["events"])
    n = len(events)
    rows = [[Fraction(0) if mode == RATIONAL else 0.0] * n for _ in range(n)]
    for i, j, v in payload["entries"]:
        val = Fraction(v) if mode == RATIONAL else float(Fraction(v) if isinstance(v, str) else v)
        rows[i][j] = val
        rows[j][i] = val
    return CertificateMatrix(events, tuple(tuple(r) for r in rows), mode)


# --- the analytic template family -----------------------------------------
#
# Pairs are indexed 0..4 with pair i coupling elements i and i+1 (mod 5).
# Each template fixes which pairs carry the heavy edge terms (they must be
# saturated for the closed-form value), which broken pairs carry corner
# terms, and the diagonal corrections; f(k) = k^3 except for M1 whose edge
# coefficient is the constant 4.

@dataclass(frozen=True)
class _Template:
    name: str
    broken: frozenset      # canonical unsaturated-pair pattern
    edges: frozenset       # pairs carrying the edge coefficient
    needs_c: bool

    def edge_coeff(self, k, c, eps):
        if self.name == "M0":
            return 1
        if self.name == "M1":
            return 4
        return k**3

    def corner_coeff(self, k, c, eps):
        if self.name == "M0":
            return 0
        if self.name == "M1":
            return 1
        return k * c

    def diag_terms(self, k, c, eps):
        """element index -> diagonal correction coefficient"""
        if self.name == "M0":
            return {0: -eps}
        if self.name == "M1":
            return {}
        if self.name == "M21":
            return {0: c * c, 3: c * c, 4: 2 * c * c}
        if self.name == "M22":
            return {0: c * c, 2: c * c, 3: c * c, 4: c * c}
        if self.name == "M31":
            half = Fraction(k, 2) if isinstance(c, Fraction) else k / 2
            return {0: half * c, 2: half * c, 3: k * c + c * c, 4: k * c + c * c}
        if self.name == "M32":
            half = Fraction(k, 2) if isinstance(c, Fraction) else k / 2
            return {1: half * c, 3: half * c, 4: k * c + c * c, 0: k * c + c * c}
        raise ValueError(self.name)


_ALL = frozenset(range(5))
TEMPLATES = {
    "M0": _Template("M0", frozenset(), _ALL, needs_c=False),
    "M1": _Template("M1", frozenset({4}), _ALL - {4}, needs_c=False),
    "M21": _Template("M21", frozenset({3, 4}), frozenset({0, 1, 2}), needs_c=True),
    "M22": _Template("M22", frozenset({2, 4}), frozenset({0, 1, 3}), needs_c=True),
    "M31": _Template("M31", frozenset({2, 3, 4}), frozenset({0, 1}), needs_c=True),
    "M32": _Template("M32", frozenset({0, 3, 4}), frozenset({1, 2}), needs_c=True),
}
_ALIASES = {"M3": "M31", "M1_k": "M1", "M21_k": "M21", "M22_k": "M22",
            "M31_k": "M31", "M32_k": "M32"}

PATTERN_TO_TEMPLATE = {t.broken: t.name for t in TEMPLATES.values()}


def build_certificate(template: str, sequence: ChainedSequence, c_ns=None,
                      eps=DEFAULT_EPS, mode=RATIONAL) -> CertificateMatrix:
    """Instantiate a template on a five-element chained sequence.

    Composite elements expand the indicator vectors over all their
    sub-events, so |i,i+1> contributes an all-ones block over the union of
    the two elements and diagonal corrections act as all-ones blocks on one
    element.
    """
    tmpl = TEMPLATES[_ALIASES.get(template, template)]
    if sequence.length != 5:
        raise ValueError("templates are defined on five-element sequences")
    k = sequence.scenario.ka
    if tmpl.needs_c:
        if c_ns is None:
            raise ValueError(f"{tmpl.name} needs the PR weight c_ns")
        c = Fraction(c_ns) if mode == RATIONAL else float(c_ns)
        if not 0 < c < 1:
            raise ValueError("c_ns must lie strictly between 0 and 1")
    else:
        c = None
    e = Fraction(eps) if mode == RATIONAL else float(eps)
    if tmpl.name == "M0" and not 0 < e:
        raise ValueError("eps must be positive")

    events = [ev for el in sequence.elements for ev in el]
    offsets = []
    pos = 0
    for el in sequence.elements:
        offsets.append(range(pos, pos + len(el)))
        pos += len(el)
    n = pos
    zero = Fraction(0) if mode == RATIONAL else 0.0
    m = [[zero] * n for _ in range(n)]

    f = tmpl.edge_coeff(k, c, e)
    for pair in tmpl.edges:
        block = list(offsets[pair]) + list(offsets[(pair + 1) % 5])
        for u in block:
            for v in block:
                m[u][v] += f
    kc = tmpl.corner_coeff(k, c, e)
    for pair in tmpl.broken:  # corner terms sit on the broken pairs
        for u in offsets[pair]:
            for v in offsets[(pair + 1) % 5]:
                m[u][v] += kc
                m[v][u] += kc
    for el, coeff in tmpl.diag_terms(k, c, e).items():
        for u in offsets[el]:
            for v in offsets[el]:
                m[u][v] += coeff

    if mode == FLOAT:
        m = [[float(v) for v in row] for row in m]
    return CertificateMatrix(tuple(events), tuple(tuple(row) for row in m), mode)


# --- eight-event ring certificate (k = 2) ----------------------------------
#
# Mixing PR(2) with neighbors that populate all four off-support events of two
# opposite settings breaks every five-element sequence, yet such boxes keep
# perfect correlations at the other two settings.  They are excluded by a
# certificate on the full eight-event PR support: the support graph is the
# eight-cycle [0,7,14,8,3,4,13,11] plus the four within-setting rungs.  With
# edge weight 1, rung couplings r1 (broken settings) and r2 (perfect
# settings), and alternating diagonals d1, d2, the matrix is PSD iff
#   d1 >= |r1|,  d2 >= |r2|,  (d1+r1)(d2+r2) >= 4,  (d1-r1)(d2-r2) >= 2,
# and the value stays positive on the whole class when d1 - r1 is of order
# 1/sqrt(min broken-setting probability).

RING_ORDER = (0, 7, 14, 8, 3, 4, 13, 11)
RING_M1_GRID = (Fraction(1, 2), Fraction(3, 4), Fraction(1), Fraction(3, 2),
                Fraction(2), Fraction(3), Fraction(4), Fraction(6),
                Fraction(8), Fraction(12), Fraction(16), Fraction(24))


def ring_sequence(box: Box, variant: int) -> ChainedSequence:
    """The support ring as an eight-element chained sequence.

    ``variant`` 0 puts the broken-rung role on settings (0,0)/(1,1);
    variant 1 on (0,1)/(1,0) (a cyclic rotation of the ring by one).
    """
    sc = box.scenario
    if (sc.ma, sc.mb, sc.ka, sc.kb) != (2, 2, 2, 2):
        raise ValueError("the ring certificate is a (2,2,2) construction")
    order = RING_ORDER if variant == 0 else RING_ORDER[1:] + RING_ORDER[:1]
    elements = tuple((i,) for i in order)
    return with_flags(sc, elements, box)


def build_ring_certificate(sequence: ChainedSequence, m1,
                           mode=RATIONAL) -> CertificateMatrix:
    """Ring certificate with broken-rung gap ``m1`` = d1 - r1."""
    if sequence.length != 8:
        raise ValueError("ring certificate needs the eight-element sequence")
    m1 = Fraction(m1)
    if m1 <= 0:
        raise ValueError("m1 must be positive")
    p1 = Fraction(1, 8)           # d1 + r1
    m2 = Fraction(2) / m1 + Fraction(1, 8)   # d2 - r2, slack above 2/m1
    p2 = Fraction(4) / p1 + Fraction(1)      # d2 + r2, slack above 4/p1
    d1, r1 = (p1 + m1) / 2, (p1 - m1) / 2
    d2, r2 = (p2 + m2) / 2, (p2 - m2) / 2
    events = tuple(el[0] for el in sequence.elements)
    n = 8
    m = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = d1 if i % 2 == 0 else d2
        j = (i + 1) % n
        m[i][j] += Fraction(1)
        m[j][i] += Fraction(1)
    for i in range(4):
        j = i + 4
        coup = r1 if i % 2 == 0 else r2
        m[i][j] = m[j][i] = coup
    if mode == FLOAT:
        m = [[float(v) for v in row] for row in m]
    return CertificateMatrix(events, tuple(tuple(row) for row in m), mode)


def _fitted_certificate(box: Box, graph: OrthogonalityGraph, events):
    """Exact certificate recovered from a small dense SDP on ``events``.

    Runs the splitting solver on the pattern induced by the orthogonality
    graph, rationalizes the float solution and repairs the diagonal until
    pivoted LDL^T verifies positive semidefiniteness exactly.
    """
    events = tuple(events)
    n = len(events)
    p = np.array([float(box.probs[e]) for e in events])
    pattern = np.zeros((n, n), dtype=bool)
    np.fill_diagonal(pattern, True)
    for i in range(n):
        for j in range(n):
            if i != j and graph.adjacent(events[i], events[j]):
                pattern[i, j] = True
    cost = np.outer(p, p)
    np.fill_diagonal(cost, p * p - p)
    x = np.zeros((n, n))
    y = x.copy()
    dual = x.copy()
    eye = np.eye(n)
    best = (0.0, None)
    for it in range(8000):
        x = y - dual + cost
        x[~pattern] = 0.0
        x = (x + x.T) / 2
        tr = float(np.trace(x))
        if tr > 1.0:
            x -= ((tr - 1.0) / n) * eye
        w, v = np.linalg.eigh(x + dual)
        y = (v * np.clip(w, 0.0, None)) @ v.T
        dual += x - y
        if it % 200 == 199:
            s = y.copy()
            s[~pattern] = 0.0
            s = (s + s.T) / 2
            wmin = float(np.linalg.eigvalsh(s).min())
            if wmin < 0:
                s -= wmin * eye
            tr = float(np.trace(s))
            if tr > 1.0:
                s *= 1.0 / tr
            val = float(np.sum(cost * s))
            if val > best[0]:
                best = (val, s)
    if best[1] is None:
        return None
    m = best[1]
    rows = [[Fraction(m[i, j]).limit_denominator(10**9) for j in range(n)]
            for i in range(n)]
    for i in range(n):
        for j in range(i):
            rows[i][j] = rows[j][i]
    delta = Fraction(1, 10**12)
    for _ in range(50):
        if is_psd_rational(rows):
            break
        for i in range(n):
            rows[i][i] += delta
        delta *= 4
    else:
        return None
    if box.mode == FLOAT:
        rows = [[float(v) for v in row] for row in rows]
    return CertificateMatrix(events, tuple(tuple(r) for r in rows), box.mode)


def _scan_ring(box: Box, tol, threshold):
    sc = box.scenario
    if (sc.ma, sc.mb, sc.ka, sc.kb) != (2, 2, 2, 2):
        return None
    for variant in (0, 1):
        seq = ring_sequence(box, variant)
        # rungs on the perfect settings must be saturated for the large
        # rung coupling to cancel exactly
        sums = [seq.element_sum(box, i) for i in range(8)]
        sat_tol = 0 if box.mode == RATIONAL else tol
        if abs(sums[1] + sums[5] - 1) > sat_tol or abs(sums[3] + sums[7] - 1) > sat_tol:
            continue
        for m1 in RING_M1_GRID:
            cert = build_ring_certificate(seq, m1, box.mode)
            key = ("ring", m1)
            hit = _PSD_CACHE.get(key)
            if hit is None:
                rational = build_ring_certificate(seq, m1, RATIONAL)
                hit = is_psd_rational(rational.entries)
                _PSD_CACHE[key] = hit
            if not hit:
                continue
            value = certificate_value(cert, box)
            if value > threshold:
                note = "eight-event ring certificate (broken settings on the " \
                       + ("main" if variant == 0 else "other") + " diagonal)"
                return ExclusionReport(True, "M8", value, cert, seq, None, None, note)
        from .graphs import build_orthogonality_graph

        graph = build_orthogonality_graph(sc)
        low = 0 if box.mode == RATIONAL else tol
        populated = [i for i in range(sc.n_events) if box.probs[i] > low]
        cert = _fitted_certificate(box, graph, populated)
        if cert is not None:
            value = certificate_value(cert, box)
            if value > threshold:
                note = "ring-class certificate fitted numerically and " \
                       "verified exactly"
                return ExclusionReport(True, "M8", value, cert, seq, None, None, note)
    return None


_PSD_CACHE: dict = {}


def _template_psd_ok(template, sequence, c_ns, eps, mode) -> bool:
    sizes = tuple(len(el) for el in sequence.elements)
    key = (template, sequence.scenario.ka, None if c_ns is None else Fraction(c_ns),
           Fraction(eps), sizes)
    hit = _PSD_CACHE.get(key)
    if hit is None:
        cert = build_certificate(template, sequence, c_ns, eps, RATIONAL) \
            if mode == RATIONAL else build_certificate(template, sequence,
                                                       c_ns, eps, mode)
        if cert.mode == RATIONAL:
            hit = is_psd_rational(cert.entries)
        else:
            hit = float(np.linalg.eigvalsh(np.array(cert.entries)).min()) >= -FLOAT_TOL
        _PSD_CACHE[key] = hit
    return hit


@dataclass(frozen=True)
class ExclusionReport:
    excluded: bool
    template: str | None = None
    value: object = None
    certificate: CertificateMatrix | None = None
    sequence: ChainedSequence | None = None
    c_ns: object = None
    relabeling: Relabeling | None = None
    note: str = ""


def _pr_support(scenario, flat):
    x, y, a, b = scenario.unflat(flat)
    return (b - a) % scenario.ka == x * y


def _estimate_c(box: Box, elements) -> Fraction:
    """PR weight estimate for boxes without a face spec: k * min support prob."""
    sc = box.scenario
    k = sc.ka
    support = [e for el in elements for e in el if _pr_support(sc, e)]
    if not support:
        return Fraction(1, 2)
    cand = k * min(Fraction(box.probs[e]).limit_denominator(10**12)
                   if box.mode == FLOAT else box.probs[e] for e in support)
    if not 0 < cand < 1:
        return Fraction(1, 2)
    return cand


def _scan_placements(box: Box, c_ns, eps, tol, threshold):
    sc = box.scenario
    for elements, extended in canonical_placements(sc.ka):
        seq = with_flags(sc, elements, box, tol)
        broken = frozenset(seq.unsaturated_pairs())
        name = PATTERN_TO_TEMPLATE.get(broken)
        if name is None:
            continue
        tmpl = TEMPLATES[name]
        c = c_ns if c_ns is not None else _estimate_c(box, elements)
        if tmpl.needs_c and not 0 < c < 1:
            continue
        if not _template_psd_ok(name, seq, c if tmpl.needs_c else None, eps, box.mode):
            continue
        cert = build_certificate(name, seq, c if tmpl.needs_c else None, eps, box.mode)
        value = certificate_value(cert, box)
        if value > threshold:
            note = f"{len(broken)}-unsaturated {'composite ' if extended else ''}sequence"
            return ExclusionReport(True, name, value, cert, seq,
                                   c if tmpl.needs_c else None, None, note)
    return None


def exclude_by_analytic(box: Box, face=None, eps=DEFAULT_EPS, tol=None,
                        search_relabelings=None) -> ExclusionReport:
    """Try the analytic template family against the box.

    The canonical placements cover every orientation of the chained sequence
    on a face of the canonically labeled PR^(k); for arbitrary boxes the
    search optionally repeats over all input/output relabelings (feasible for
    k <= 4).  Returns the first strictly positive certificate value.
    """
    sc = box.scenario
    if (sc.ma, sc.mb) != (2, 2) or sc.ka != sc.kb:
        raise ValueError("analytic exclusion handles (2,2,k) scenarios")
    k = sc.ka
    if tol is None:
        tol = 0 if box.mode == RATIONAL else FLOAT_TOL
    threshold = 0 if box.mode == RATIONAL else float(tol)
    c_ns = Fraction(face.weights[0]) if face is not None else None
    if face is not None and box.mode == FLOAT:
        c_ns = float(c_ns)

    hit = _scan_placements(box, c_ns, eps, tol, threshold)
    if hit is None and k == 2:
        hit = _scan_ring(box, tol, threshold)
    if hit is not None:
        return hit

    if search_relabelings is None:
        search_relabelings = face is None and k <= 4
    if search_relabelings:
        seen = {box.probs}
        for rel in all_relabelings(sc):
            relabeled = apply_relabeling(box, rel)
            if relabeled.probs in seen:
                continue
            seen.add(relabeled.probs)
            hit = _scan_placements(relabeled, c_ns, eps, tol, threshold)
            if hit is None and k == 2:
                hit = _scan_ring(relabeled, tol, threshold)
            if hit is not None:
                return ExclusionReport(True, hit.template, hit.value,
                                       hit.certificate, hit.sequence, hit.c_ns,
                                       rel, hit.note + " (after relabeling)")
    return ExclusionReport(False)
