"""Bell scenarios, probability boxes, relabelings and correlators.

Everything here comes in two numeric modes that are never mixed inside one
computation: exact rationals (``fractions.Fraction``) and 64-bit floats.
Rational mode makes no-signaling and certificate claims exact statements
rather than approximations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

RATIONAL = "rational"
FLOAT = "float"

#: default tolerance for equality checks in float mode
FLOAT_TOL = 1e-9

#: cap on deterministic-box enumeration (ka**ma * kb**mb)
DETERMINISTIC_CAP = 10**6


def parse_scalar(value, mode):
    """Parse one probability entry.  Rational mode accepts ints and "p/q"."""
    if mode == RATIONAL:
        if isinstance(value, bool) or isinstance(value, float):
            raise ValueError(f"rational mode cannot take float entry {value!r}")
        if isinstance(value, (int, Fraction)):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
        raise ValueError(f"bad rational entry {value!r}")
    if mode == FLOAT:
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            return float(Fraction(value))
        raise ValueError(f"bad float entry {value!r}")
    raise ValueError(f"unknown mode {mode!r}")


def format_scalar(value, mode):
    if mode == RATIONAL:
        f = Fraction(value)
        return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)
    return float(value)


def scalar_zero(mode):
    return Fraction(0) if mode == RATIONAL else 0.0


@dataclass(frozen=True)
class BellScenario:
    """A (2-party) Bell scenario: input counts ma, mb and output counts ka, kb."""

    ma: int
    mb: int
    ka: int
    kb: int

    def __post_init__(self):
        if min(self.ma, self.mb, self.ka, self.kb) < 2:
            raise ValueError("all scenario parameters must be >= 2")

    @property
    def n_events(self) -> int:
        return self.ma * self.mb * self.ka * self.kb

    def flat(self, x: int, y: int, a: int, b: int) -> int:
        # canonical flat order ((x*mb + y)*ka + a)*kb + b
        return ((x * self.mb + y) * self.ka + a) * self.kb + b

    def unflat(self, i: int) -> tuple[int, int, int, int]:
        i, b = divmod(i, self.kb)
        i, a = divmod(i, self.ka)
        x, y = divmod(i, self.mb)
        return x, y, a, b

    def events(self):
        return product(range(self.ma), range(self.mb), range(self.ka), range(self.kb))

    def settings(self):
        return product(range(self.ma), range(self.mb))


@dataclass(frozen=True)
class EventIndex:
    """One event (a,b|x,y); ``flat`` gives its position in the canonical order."""

    x: int
    y: int
    a: int
    b: int

    def flat(self, scenario: BellScenario) -> int:
        return scenario.flat(self.x, self.y, self.a, self.b)

    @classmethod
    def from_flat(cls, scenario: BellScenario, i: int) -> "EventIndex":
        return cls(*scenario.unflat(i))


def locally_orthogonal(e1, e2) -> bool:
    """Same input for some party, different output for that party."""
    x1, y1, a1, b1 = e1
    x2, y2, a2, b2 = e2
    return (x1 == x2 and a1 != a2) or (y1 == y2 and b1 != b2)


@dataclass(frozen=True)
class Box:
    """Conditional probability table P(a,b|x,y) in canonical flat order."""

    scenario: BellScenario
    probs: tuple
    mode: str

    def __post_init__(self):
        if self.mode not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.probs) != self.scenario.n_events:
            raise ValueError(
                f"probs length {len(self.probs)} != event count {self.scenario.n_events}"
            )
        tol = 0 if self.mode == RATIONAL else FLOAT_TOL
        for p in self.probs:
            if p < -tol:
                raise ValueError(f"negative probability {p}")
        for x, y in self.scenario.settings():
            s = self.setting_sum(x, y)
            if abs(s - 1) > tol:
                raise ValueError(f"setting ({x},{y}) sums to {s}, not 1")

    def prob(self, x: int, y: int, a: int, b: int):
        return self.probs[self.scenario.flat(x, y, a, b)]

    def setting_sum(self, x: int, y: int):
        sc = self.scenario
        return sum(
            self.probs[sc.flat(x, y, a, b)]
            for a in range(sc.ka)
            for b in range(sc.kb)
        )

    def alice_marginal(self, a: int, x: int, y: int):
        """P_A(a|x) computed through Bob's input y."""
        sc = self.scenario
        return sum(self.probs[sc.flat(x, y, a, b)] for b in range(sc.kb))

    def bob_marginal(self, b: int, y: int, x: int):
        sc = self.scenario
        return sum(self.probs[sc.flat(x, y, a, b)] for a in range(sc.ka))

    def as_float(self) -> "Box":
        if self.mode == FLOAT:
            return self
        return Box(self.scenario, tuple(float(p) for p in self.probs), FLOAT)


def validate_no_signaling(box: Box, tol=None):
    """Check the marginal-consistency equalities.

    Returns ``(ok, violations)`` where each violation is a tuple
    ``("B", b, x, xp, y)`` (Bob's marginal of b at y differs between Alice
    inputs x and xp) or ``("A", a, y, yp, x)`` for the mirror constraint.
    Exact in rational mode.
    """
    sc = box.scenario
    if tol is None:
        tol = 0 if box.mode == RATIONAL else FLOAT_TOL
    violations = []
    for y in range(sc.mb):
        for b in range(sc.kb):
            ref = box.bob_marginal(b, y, 0)
            for x in range(1, sc.ma):
                if abs(box.bob_marginal(b, y, x) - ref) > tol:
                    violations.append(("B", b, 0, x, y))
    for x in range(sc.ma):
        for a in range(sc.ka):
            ref = box.alice_marginal(a, x, 0)
            for y in range(1, sc.mb):
                if abs(box.alice_marginal(a, x, y) - ref) > tol:
                    violations.append(("A", a, 0, y, x))
    return (not violations), violations


def deterministic_box(scenario: BellScenario, f, g, mode=RATIONAL) -> Box:
    """Box of the deterministic strategy a = f(x), b = g(y)."""
    one = Fraction(1) if mode == RATIONAL else 1.0
    zero = scalar_zero(mode)
    probs = [zero] * scenario.n_events
    for x in range(scenario.ma):
        for y in range(scenario.mb):
            probs[scenario.flat(x, y, f[x], g[y])] = one
    return Box(scenario, tuple(probs), mode)


def enumerate_local_deterministic(scenario: BellScenario, mode=RATIONAL,
                                  cap=DETERMINISTIC_CAP) -> list[Box]:
    """All ka**ma * kb**mb deterministic boxes, lexicographic in (f, g)."""
    total = scenario.ka**scenario.ma * scenario.kb**scenario.mb
    if total > cap:
        raise ValueError(f"deterministic enumeration {total} exceeds cap {cap}")
    boxes = []
    for f in product(range(scenario.ka), repeat=scenario.ma):
        for g in product(range(scenario.kb), repeat=scenario.mb):
            boxes.append(deterministic_box(scenario, f, g, mode))
    return boxes


def pr_box(k: int, mode=RATIONAL) -> Box:
    """The k-outcome PR box: P(a,b|x,y) = 1/k iff (b-a) mod k = x*y."""
    if k < 2:
        raise ValueError("pr_box requires k >= 2")
    sc = BellScenario(2, 2, k, k)
    val = Fraction(1, k) if mode == RATIONAL else 1.0 / k
    zero = scalar_zero(mode)
    probs = [zero] * sc.n_events
    for x, y, a, b in sc.events():
        if (b - a) % k == x * y:
            probs[sc.flat(x, y, a, b)] = val
    return Box(sc, tuple(probs), mode)


@dataclass(frozen=True)
class Relabeling:
    """Input permutations per party plus per-(old-)input output permutations."""

    x_perm: tuple
    y_perm: tuple
    a_perms: tuple  # a_perms[x] maps old output a -> new output
    b_perms: tuple

    def __post_init__(self):
        for perm in (self.x_perm, self.y_perm, *self.a_perms, *self.b_perms):
            if sorted(perm) != list(range(len(perm))):
                raise ValueError(f"{perm} is not a permutation")

    @classmethod
    def identity(cls, scenario: BellScenario) -> "Relabeling":
        return cls(
            tuple(range(scenario.ma)),
            tuple(range(scenario.mb)),
            tuple(tuple(range(scenario.ka)) for _ in range(scenario.ma)),
            tuple(tuple(range(scenario.kb)) for _ in range(scenario.mb)),
        )

    def map_event(self, e):
        x, y, a, b = e
        return (self.x_perm[x], self.y_perm[y], self.a_perms[x][a], self.b_perms[y][b])

    def compose(self, first: "Relabeling") -> "Relabeling":
        """Relabeling equal to applying ``first`` and then ``self``."""
        ma, mb = len(self.x_perm), len(self.y_perm)
        x_perm = tuple(self.x_perm[first.x_perm[x]] for x in range(ma))
        y_perm = tuple(self.y_perm[first.y_perm[y]] for y in range(mb))
        a_perms = tuple(
            tuple(self.a_perms[first.x_perm[x]][first.a_perms[x][a]]
                  for a in range(len(first.a_perms[x])))
            for x in range(ma)
        )
        b_perms = tuple(
            tuple(self.b_perms[first.y_perm[y]][first.b_perms[y][b]]
                  for b in range(len(first.b_perms[y])))
            for y in range(mb)
        )
        return Relabeling(x_perm, y_perm, a_perms, b_perms)


def apply_relabeling(box: Box, rel: Relabeling) -> Box:
    sc = box.scenario
    if (len(rel.x_perm), len(rel.y_perm)) != (sc.ma, sc.mb) or any(
        len(p) != sc.ka for p in rel.a_perms
    ) or any(len(p) != sc.kb for p in rel.b_perms):
        raise ValueError("relabeling dimensions do not match scenario")
    probs = [None] * sc.n_events
    for e in sc.events():
        probs[sc.flat(*rel.map_event(e))] = box.probs[sc.flat(*e)]
    return Box(sc, tuple(probs), box.mode)


def all_relabelings(scenario: BellScenario):
    """Iterate every relabeling: input perms x per-input output perms."""
    from itertools import permutations

    x_perms = list(permutations(range(scenario.ma)))
    y_perms = list(permutations(range(scenario.mb)))
    a_out = list(permutations(range(scenario.ka)))
    b_out = list(permutations(range(scenario.kb)))
    for xp in x_perms:
        for yp in y_perms:
            for aps in product(a_out, repeat=scenario.ma):
                for bps in product(b_out, repeat=scenario.mb):
                    yield Relabeling(xp, yp, aps, bps)


def mix(boxes: list[Box], weights) -> Box:
    """Entrywise convex combination; weight sum is checked exactly when rational."""
    if not boxes:
        raise ValueError("mix of no boxes")
    if len(boxes) != len(weights):
        raise ValueError("boxes and weights differ in length")
    sc = boxes[0].scenario
    mode = boxes[0].mode
    for b in boxes:
        if b.scenario != sc or b.mode != mode:
            raise ValueError("mix requires one scenario and one numeric mode")
    weights = [parse_scalar(w, mode) for w in weights]
    tol = 0 if mode == RATIONAL else FLOAT_TOL
    if any(w < -tol for w in weights):
        raise ValueError("negative weight")
    if abs(sum(weights) - 1) > tol:
        raise ValueError(f"weights sum to {sum(weights)}, not 1")
    probs = tuple(
        sum(w * b.probs[i] for w, b in zip(weights, boxes))
        for i in range(sc.n_events)
    )
    return Box(sc, probs, mode)


@dataclass(frozen=True)
class CorrelatorTable:
    """E[x][y] = <A_x B_y> for +/-1 outcomes, stored row-major over x."""

    E: tuple
    mode: str

    @property
    def ma(self):
        return len(self.E)

    @property
    def mb(self):
        return len(self.E[0])

    def __post_init__(self):
        tol = 0 if self.mode == RATIONAL else FLOAT_TOL
        for row in self.E:
            for e in row:
                if abs(e) > 1 + tol:
                    raise ValueError(f"correlator {e} outside [-1, 1]")


def correlators_of(box: Box) -> CorrelatorTable:
    sc = box.scenario
    if sc.ka != 2 or sc.kb != 2:
        raise ValueError("correlators need binary outcomes")
    sign = {0: 1, 1: -1}
    E = tuple(
        tuple(
            sum(sign[a] * sign[b] * box.prob(x, y, a, b) for a in (0, 1) for b in (0, 1))
            for y in range(sc.mb)
        )
        for x in range(sc.ma)
    )
    return CorrelatorTable(E, box.mode)


def box_of_correlators(table) -> Box:
    """Lift correlators to the unique box with unbiased local marginals."""
    if not isinstance(table, CorrelatorTable):
        rows = tuple(tuple(r) for r in table)
        mode = RATIONAL if all(
            isinstance(e, (int, Fraction)) for row in rows for e in row
        ) else FLOAT
        table = CorrelatorTable(rows, mode)
    ma, mb = table.ma, table.mb
    sc = BellScenario(ma, mb, 2, 2)
    quarter = Fraction(1, 4) if table.mode == RATIONAL else 0.25
    probs = [None] * sc.n_events
    for x, y, a, b in sc.events():
        s = 1 if (a + b) % 2 == 0 else -1
        probs[sc.flat(x, y, a, b)] = quarter * (1 + s * table.E[x][y])
    return Box(sc, tuple(probs), table.mode)


def box_to_json(box: Box) -> str:
    payload = {
        "scenario": {"ma": box.scenario.ma, "mb": box.scenario.mb,
                     "ka": box.scenario.ka, "kb": box.scenario.kb},
        "mode": box.mode,
        "probs": [format_scalar(p, box.mode) for p in box.probs],
    }
    return json.dumps(payload)


def box_from_json(text: str) -> Box:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed box JSON: {exc}") from exc
    try:
        s = payload["scenario"]
        scenario = BellScenario(int(s["ma"]), int(s["mb"]), int(s["ka"]), int(s["kb"]))
        mode = payload["mode"]
        probs = tuple(parse_scalar(p, mode) for p in payload["probs"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad box JSON structure: {exc}") from exc
    return Box(scenario, probs, mode)


def uniform_box(scenario: BellScenario, mode=RATIONAL) -> Box:
    p = Fraction(1, scenario.ka * scenario.kb) if mode == RATIONAL \
        else 1.0 / (scenario.ka * scenario.kb)
    return Box(scenario, tuple([p] * scenario.n_events), mode)
