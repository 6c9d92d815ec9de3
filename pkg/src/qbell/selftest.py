"""The (2,m,2) quantum boundary and singlet self-testing in a two-qubit model.

All measurements are planar qubit observables cos(t)*sz + sin(t)*sx on the
maximally entangled state (|00> + |11>)/sqrt(2), so every correlator is a
cosine of an angle difference; the boundary condition, the weighted chained
inequality and the swap-isometry extraction are all checked numerically in
this explicit model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import FLOAT, Box, CorrelatorTable, box_of_correlators

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
IDENT = np.eye(2, dtype=complex)

#: (|00> + |11>)/sqrt(2)
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / math.sqrt(2)


def planar_observable(theta: float) -> np.ndarray:
    return math.cos(theta) * SIGMA_Z + math.sin(theta) * SIGMA_X


@dataclass(frozen=True)
class PlanarModel:
    """Planar measurement angles for both parties; the state is fixed."""

    theta_a: tuple
    theta_b: tuple

    def __post_init__(self):
        if len(self.theta_a) != len(self.theta_b):
            raise ValueError("need the same number of settings per party")
        if len(self.theta_a) < 2:
            raise ValueError("m >= 2 settings required")

    @property
    def m(self) -> int:
        return len(self.theta_a)

    def a_op(self, i: int) -> np.ndarray:
        return planar_observable(self.theta_a[i])

    def b_op(self, j: int) -> np.ndarray:
        return planar_observable(self.theta_b[j])


def canonical_chained_model(m: int) -> PlanarModel:
    """Equal-spacing angles: step pi/m for each party, offset pi/2m.

    This is the optimum of the chained inequality; for m = 2 it is the
    CHSH-optimal model thetaA = (0, pi/2), thetaB = (pi/4, 3pi/4).
    """
    if m < 2:
        raise ValueError("m >= 2")
    theta_a = tuple(i * math.pi / m for i in range(m))
    theta_b = tuple((2 * i + 1) * math.pi / (2 * m) for i in range(m))
    return PlanarModel(theta_a, theta_b)


def model_from_json_dict(payload: dict) -> PlanarModel:
    m = int(payload["m"])
    ta = tuple(float(t) for t in payload["thetaA"])
    tb = tuple(float(t) for t in payload["thetaB"])
    if len(ta) != m or len(tb) != m:
        raise ValueError("thetaA/thetaB lengths must equal m")
    return PlanarModel(ta, tb)


def _pair_expectation(a: np.ndarray, b: np.ndarray) -> float:
    op = np.kron(a, b)
    return float(np.real(np.vdot(PHI_PLUS, op @ PHI_PLUS)))


def correlators_from_model(model: PlanarModel) -> CorrelatorTable:
    """E[i][j] by the closed form and by the explicit 4x4 expectation.

    The two computations must agree to 1e-12; this pins the sign and
    ordering conventions of the model.
    """
    m = model.m
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            closed = math.cos(model.theta_a[i] - model.theta_b[j])
            explicit = _pair_expectation(model.a_op(i), model.b_op(j))
            if abs(closed - explicit) > 1e-12:
                raise AssertionError(
                    f"correlator mismatch at ({i},{j}): {closed} vs {explicit}")
            row.append(min(1.0, max(-1.0, explicit)))
        rows.append(tuple(row))
    return CorrelatorTable(tuple(rows), FLOAT)


def box_from_model(model: PlanarModel) -> Box:
    return box_of_correlators(correlators_from_model(model))


@dataclass(frozen=True)
class AngleTable:
    """alpha[i][j] = arccos E[i][j], in [0, pi]."""

    alpha: tuple

    @property
    def m(self) -> int:
        return len(self.alpha)


def angle_table(table: CorrelatorTable) -> AngleTable:
    return AngleTable(tuple(
        tuple(math.acos(min(1.0, max(-1.0, float(e)))) for e in row)
        for row in table.E
    ))


def boundary_residual(angles: AngleTable, m: int | None = None) -> float:
    """sum_{i<m} (alpha_ii + alpha_{i+1,i}) - (alpha_{1,m} - alpha_{m,m}).

    Zero exactly on the generalized correlator boundary (with the model
    canonically ordered).  Indices follow the 1-based convention, so
    alpha[i][j] here is alpha[i-1][j-1].
    """
    a = angles.alpha
    if m is None:
        m = len(a)
    left = sum(a[i][i] + a[i + 1][i] for i in range(m - 1))
    right = a[0][m - 1] - a[m - 1][m - 1]
    return left - right


def tlm_residual(table: CorrelatorTable, pivot: tuple, xi: int) -> float:
    """sum_{(x,y) != pivot} arcsin E[x][y] - arcsin E[pivot] - xi*pi (m = 2).

    The pivot is 1-based, xi in {+1, -1}; both conventions are exposed
    because different orientations of the same boundary use different signs.
    """
    if len(table.E) != 2 or len(table.E[0]) != 2:
        raise ValueError("the TLM boundary is a two-setting statement")
    if xi not in (1, -1):
        raise ValueError("xi must be +1 or -1")
    i, j = pivot
    if not (1 <= i <= 2 and 1 <= j <= 2):
        raise ValueError("pivot indices are 1-based in {1,2}")
    total = 0.0
    for x in range(2):
        for y in range(2):
            term = math.asin(min(1.0, max(-1.0, float(table.E[x][y]))))
            if (x + 1, y + 1) == (i, j):
                total -= term
            else:
                total += term
    return total - xi * math.pi


@dataclass(frozen=True)
class WeightedChain:
    """Weights of the chained expression: diagonal c_{i,i}, sub-diagonal
    c_{i+1,i}, and the single cross term c_{1,m} entering with a minus."""

    diag: tuple      # length m
    sub: tuple       # length m-1
    cross: float

    @property
    def m(self) -> int:
        return len(self.diag)

    def __post_init__(self):
        if len(self.sub) != len(self.diag) - 1:
            raise ValueError("need m diagonal and m-1 sub-diagonal weights")
        if any(w <= 0 for w in self.diag + self.sub + (self.cross,)):
            raise ValueError("chain weights must be positive")

    def total(self) -> float:
        return float(sum(self.diag) + sum(self.sub) + self.cross)


def unit_chain(m: int) -> WeightedChain:
    return WeightedChain((1.0,) * m, (1.0,) * (m - 1), 1.0)


def chain_value(table: CorrelatorTable, chain: WeightedChain) -> float:
    """The weighted chained expression evaluated on a correlator table."""
    e = table.E
    m = chain.m
    if len(e) != m:
        raise ValueError("correlator table size differs from chain size")
    val = sum(chain.diag[i] * float(e[i][i]) for i in range(m))
    val += sum(chain.sub[i] * float(e[i + 1][i]) for i in range(m - 1))
    val -= chain.cross * float(e[0][m - 1])
    return val


def classical_chain_max(chain: WeightedChain, m: int | None = None) -> float:
    """Maximum over deterministic +/-1 strategies.

    Bob's optimal answer for each input is the sign of its coefficient, so
    only Alice's 2^m assignments are enumerated (2^(m-1) after the global
    sign flip).
    """
    if m is None:
        m = chain.m
    if m != chain.m:
        raise ValueError("m mismatch")
    if m > 12:
        raise ValueError("enumeration capped at m = 12")
    best = -math.inf
    for mask in range(1 << (m - 1)):
        a = [1] + [1 - 2 * ((mask >> i) & 1) for i in range(m - 1)]
        val = 0.0
        for i in range(m - 1):
            val += abs(chain.diag[i] * a[i] + chain.sub[i] * a[i + 1])
        val += abs(chain.diag[m - 1] * a[m - 1] - chain.cross * a[0])
        best = max(best, val)
    return best


def boundary_weights(angles: AngleTable) -> WeightedChain:
    """Tangent-functional weights 1/sin(alpha) for every chain term.

    The boundary point then locally maximizes the weighted expression; a
    zero angle makes the tangent undefined.
    """
    a = angles.alpha
    m = len(a)
    terms = [a[i][i] for i in range(m)] + [a[i + 1][i] for i in range(m - 1)] \
        + [a[0][m - 1]]
    if any(t <= 0 or t >= math.pi for t in terms):
        raise ValueError("degenerate angle: boundary weight undefined")
    return WeightedChain(
        tuple(1.0 / math.sin(a[i][i]) for i in range(m)),
        tuple(1.0 / math.sin(a[i + 1][i]) for i in range(m - 1)),
        1.0 / math.sin(a[0][m - 1]),
    )


@dataclass(frozen=True)
class ControlOperators:
    za: np.ndarray
    xa: np.ndarray
    zb: np.ndarray
    xb: np.ndarray

    def unitarity_residual(self) -> float:
        return max(
            float(np.abs(op @ op.conj().T - IDENT).max())
            for op in (self.za, self.xa, self.zb, self.xb)
        )


def control_operators(model: PlanarModel) -> ControlOperators:
    """Control operators from the first two settings of each party:

        Z_A = A_1
        X_A = (A_2 - cos(a11 + a21) A_1) / sin(a11 + a21)
        Z_B = (sin(a12) B_1 - sin(a11) B_2) / sin(a12 - a11)
        X_B = (cos(a11) B_2 - cos(a12) B_1) / sin(a12 - a11)
    """
    table = correlators_from_model(model)
    a = angle_table(table).alpha
    a11, a21, a12 = a[0][0], a[1][0], a[0][1]
    s_sum = math.sin(a11 + a21)
    s_dif = math.sin(a12 - a11)
    if abs(s_sum) < 1e-12 or abs(s_dif) < 1e-12:
        raise ValueError("degenerate angles: control operators undefined")
    a1, a2 = model.a_op(0), model.a_op(1)
    b1, b2 = model.b_op(0), model.b_op(1)
    za = a1
    xa = (a2 - math.cos(a11 + a21) * a1) / s_sum
    zb = (math.sin(a12) * b1 - math.sin(a11) * b2) / s_dif
    xb = (math.cos(a11) * b2 - math.cos(a12) * b1) / s_dif
    return ControlOperators(za, xa, zb, xb)


@dataclass(frozen=True)
class SelfTestReport:
    z_match: float          # ||(Z_A x I - I x Z_B)|phi>||
    x_match: float
    anticommutator_a: float
    anticommutator_b: float
    zz_expectation: float
    xx_expectation: float

    def max_residual(self) -> float:
        return max(self.z_match, self.x_match,
                   self.anticommutator_a, self.anticommutator_b,
                   abs(self.zz_expectation - 1), abs(self.xx_expectation - 1))


def verify_self_test_conditions(model: PlanarModel) -> SelfTestReport:
    ops = control_operators(model)
    psi = PHI_PLUS

    def on_a(op):
        return np.kron(op, IDENT)

    def on_b(op):
        return np.kron(IDENT, op)

    z_match = float(np.linalg.norm((on_a(ops.za) - on_b(ops.zb)) @ psi))
    x_match = float(np.linalg.norm((on_a(ops.xa) - on_b(ops.xb)) @ psi))
    anti_a = float(np.linalg.norm(on_a(ops.xa @ ops.za + ops.za @ ops.xa) @ psi))
    anti_b = float(np.linalg.norm(on_b(ops.xb @ ops.zb + ops.zb @ ops.xb) @ psi))
    zz = float(np.real(np.vdot(psi, np.kron(ops.za, ops.zb) @ psi)))
    xx = float(np.real(np.vdot(psi, np.kron(ops.xa, ops.xb) @ psi)))
    return SelfTestReport(z_match, x_match, anti_a, anti_b, zz, xx)


def _nearest_unitary(op: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(op)
    return u @ vh


def swap_isometry_apply(ops: ControlOperators, sys_vec: np.ndarray) -> np.ndarray:
    """Apply the swap circuit to |sys>|00>: Hadamards on the ancillas around
    controlled-Z then controlled-X applications of the control operators.

    Output lives in (A x B) x (A' x B') ordered as sys*4 + anc.
    """
    za, xa = _nearest_unitary(ops.za), _nearest_unitary(ops.xa)
    zb, xb = _nearest_unitary(ops.zb), _nearest_unitary(ops.xb)
    ia = IDENT
    plus_a, minus_a = ia + za, ia - za
    plus_b, minus_b = ia + zb, ia - zb
    terms = {
        (0, 0): np.kron(plus_a, plus_b),
        (1, 0): np.kron(xa @ minus_a, plus_b),
        (0, 1): np.kron(plus_a, xb @ minus_b),
        (1, 1): np.kron(xa @ minus_a, xb @ minus_b),
    }
    out = np.zeros(16, dtype=complex)
    for (anc_a, anc_b), op in terms.items():
        branch = op @ sys_vec / 4.0
        anc = 2 * anc_a + anc_b
        for s in range(4):
            out[s * 4 + anc] += branch[s]
    return out


def swap_isometry_fidelity(model: PlanarModel, state: np.ndarray | None = None) -> float:
    """Fidelity of the ancilla pair with the maximally entangled state."""
    ops = control_operators(model)
    psi = PHI_PLUS if state is None else np.asarray(state, dtype=complex)
    out = swap_isometry_apply(ops, psi)
    norm = float(np.real(np.vdot(out, out)))
    if norm < 1e-30:
        return 0.0
    o = out.reshape(4, 4)
    rho = o.T @ o.conj()
    fid = float(np.real(np.vdot(PHI_PLUS, rho @ PHI_PLUS)))
    return fid / norm


def operator_pushforward_residual(model: PlanarModel, i: int, j: int) -> float:
    """|| Phi(A_i B_j |phi+>|00>) - (I x A~_i B~_j) Phi(|phi+>|00>) ||.

    A~_i = a_{z,i} sz + a_{x,i} sx with coefficients read off the control
    operators; zero when the extraction commutes with the measurements.
    """
    ops = control_operators(model)
    psi = PHI_PLUS
    ai, bj = model.a_op(i), model.b_op(j)
    lhs = swap_isometry_apply(ops, np.kron(ai, bj) @ psi)
    az = float(np.real(np.vdot(np.kron(ops.za, IDENT) @ psi, np.kron(ai, IDENT) @ psi)))
    ax = float(np.real(np.vdot(np.kron(ops.xa, IDENT) @ psi, np.kron(ai, IDENT) @ psi)))
    bz = float(np.real(np.vdot(np.kron(IDENT, ops.zb) @ psi, np.kron(IDENT, bj) @ psi)))
    bx = float(np.real(np.vdot(np.kron(IDENT, ops.xb) @ psi, np.kron(IDENT, bj) @ psi)))
    tilde_a = az * SIGMA_Z + ax * SIGMA_X
    tilde_b = bz * SIGMA_Z + bx * SIGMA_X
    anc_op = np.kron(np.eye(4, dtype=complex), np.kron(tilde_a, tilde_b))
    rhs = anc_op @ swap_isometry_apply(ops, psi)
    return float(np.linalg.norm(lhs - rhs))


def pair_angle_residuals(model: PlanarModel) -> tuple:
    """Residuals of the planarity saturation: theta_{i,i+1} versus
    alpha_{i,i} + alpha_{i+1,i}, and theta_{m,1} versus |alpha_mm - alpha_1m|.
    """
    table = correlators_from_model(model)
    a = angle_table(table).alpha
    m = model.m
    psi = PHI_PLUS
    res = []
    for i in range(m - 1):
        op = np.kron(model.a_op(i) @ model.a_op(i + 1), IDENT)
        theta = math.acos(min(1.0, max(-1.0, float(np.real(np.vdot(psi, op @ psi))))))
        res.append(abs(theta - (a[i][i] + a[i + 1][i])))
    op = np.kron(model.a_op(m - 1) @ model.a_op(0), IDENT)
    theta = math.acos(min(1.0, max(-1.0, float(np.real(np.vdot(psi, op @ psi))))))
    res.append(abs(theta - abs(a[m - 1][m - 1] - a[0][m - 1])))
    return tuple(res)
