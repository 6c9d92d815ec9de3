"""Small dense SDP solver for certificate search and XOR-game quantum bias.

Both problems maximize a linear functional over an intersection of the PSD
cone with simple affine sets (a support pattern plus a trace bound, or a
fixed diagonal).  The solver is a first-order splitting scheme: alternating
projections onto the two sets with running dual corrections, which converges
to the intersection projection; the reported value is always recomputed from
an exactly feasible (snapped) iterate, so solver error can overestimate
nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import Box
from .graphs import OrthogonalityGraph

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50_000


def project_psd(s: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite entries in PSD projection input")
    s = (s + s.T) / 2
    w, v = np.linalg.eigh(s)
    return (v * np.clip(w, 0.0, None)) @ v.T


@dataclass
class SdpProblem:
    cost: np.ndarray
    pattern: np.ndarray            # boolean, allowed entries (diagonal always True)
    trace_bound: float | None = None
    fixed_diagonal: np.ndarray | None = None

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        self.pattern = np.asarray(self.pattern, dtype=bool)
        if (self.trace_bound is None) == (self.fixed_diagonal is None):
            raise ValueError("exactly one of trace_bound / fixed_diagonal")
        if not np.array_equal(self.pattern, self.pattern.T):
            raise ValueError("pattern must be symmetric")


@dataclass
class SdpResult:
    value: float
    matrix: np.ndarray
    status: str
    min_eigenvalue: float
    pattern_violation: float
    trace_slack: float
    iterations: int


def _solve_pattern_trace(problem: SdpProblem, tol: float, max_iter: int) -> SdpResult:
    cost = problem.cost
    pattern = problem.pattern
    tau = float(problem.trace_bound)
    n = cost.shape[0]
    eye = np.eye(n)
    scale = np.linalg.norm(cost)
    rho = scale if scale > 0 else 1.0

    def snap(y):
        s = y.copy()
        s[~pattern] = 0.0
        s = (s + s.T) / 2
        wmin = float(np.linalg.eigvalsh(s).min())
        if wmin < 0:
            s -= wmin * eye
        tr = float(np.trace(s))
        if tr > tau:
            s *= tau / tr
        return s

    x = np.zeros((n, n))
    y = x.copy()
    dual = x.copy()
    best_val = 0.0
    best_m = np.zeros((n, n))
    stall = 0
    it = 0
    check_every = 50
    for it in range(1, max_iter + 1):
        x = y - dual + cost / rho
        x[~pattern] = 0.0
        x = (x + x.T) / 2
        tr = float(np.trace(x))
        if tr > tau:
            x -= ((tr - tau) / n) * eye
        w, v = np.linalg.eigh(x + dual)
        y = (v * np.clip(w, 0.0, None)) @ v.T
        dual += x - y
        if it % check_every == 0:
            s = snap(y)
            val = float(np.sum(cost * s))
            if val > best_val + tol:
                best_val, best_m = val, s
                stall = 0
            else:
                stall += 1
            if stall >= 20:
                break
    status = "optimal" if it < max_iter else "max_iter"
    s = best_m
    patt_viol = float(np.abs(np.where(pattern, 0.0, s)).max()) if s.size else 0.0
    return SdpResult(
        value=float(np.sum(cost * s)),
        matrix=s,
        status=status,
        min_eigenvalue=float(np.linalg.eigvalsh(s).min()),
        pattern_violation=patt_viol,
        trace_slack=tau - float(np.trace(s)),
        iterations=it,
    )


def certificate_cost(box: Box) -> np.ndarray:
    """C with C_uv = P_u P_v off the diagonal and C_uu = P_u^2 - P_u."""
    p = np.array([float(q) for q in box.probs])
    c = np.outer(p, p)
    np.fill_diagonal(c, p * p - p)
    return c


def graph_pattern(graph: OrthogonalityGraph) -> np.ndarray:
    n = graph.n
    pattern = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in graph.neighbors[i]:
            pattern[i, j] = True
    np.fill_diagonal(pattern, True)
    return pattern


def solve_certificate_sdp(box: Box, graph: OrthogonalityGraph, tau: float = 1.0,
                          tol: float = DEFAULT_TOL,
                          max_iter: int = DEFAULT_MAX_ITER) -> SdpResult:
    """Maximize the exclusion witness over valid certificates with Tr M <= tau.

    A strictly positive value excludes the box from the theta body (and so
    from the quantum set); the value is recomputed from a feasible matrix, so
    boxes inside the theta body can never produce a false positive beyond
    floating-point residue.
    """
    if graph.n != box.scenario.n_events:
        raise ValueError("box and graph disagree on the event count")
    if tau <= 0:
        raise ValueError("trace bound must be positive")
    problem = SdpProblem(certificate_cost(box), graph_pattern(graph), trace_bound=tau)
    return _solve_pattern_trace(problem, tol, max_iter)


def _gram_polish(w: np.ndarray, c: np.ndarray, iters: int = 2000,
                 tol: float = 1e-14) -> np.ndarray:
    """Alternating maximization of sum G_ij u_i.v_j over unit vectors.

    Coordinate ascent on the Gram factorization; each update is the exact
    optimizer for one side, so the objective is monotone.
    """
    n = c.shape[0]
    w_eig, v = np.linalg.eigh((c + c.T) / 2)
    vecs = v * np.sqrt(np.clip(w_eig, 0.0, None))
    prev = -np.inf
    for _ in range(iters):
        for i in range(n):
            grad = w[i] @ vecs
            nrm = np.linalg.norm(grad)
            if nrm > 1e-15:
                vecs[i] = grad / nrm
        val = float(np.sum(w * (vecs @ vecs.T)))
        if val - prev < tol:
            break
        prev = val
    return vecs @ vecs.T


def solve_elliptope_bias(game: np.ndarray, tol: float = DEFAULT_TOL,
                         max_iter: int = 20_000) -> float:
    """Quantum bias of an XOR game: max sum_ij G_ij C_{i, ma+j} on the elliptope.

    Splitting iterations as above (fixed unit diagonal instead of a trace
    bound), then a Gram-factorization polish whose output is feasible by
    construction; a deterministic classical strategy seeds the value so the
    result never falls below the classical bias.
    """
    g = np.asarray(game, dtype=float)
    ma, mb = g.shape
    n = ma + mb
    w = np.zeros((n, n))
    w[:ma, ma:] = g / 2
    w[ma:, :ma] = g.T / 2
    eye = np.eye(n)

    # classical seed: rank-one +/-1 assignment from the exact inner maximization
    best = 0.0
    for mask in range(1 << (ma - 1)):
        a = np.array([1] + [1 - 2 * ((mask >> i) & 1) for i in range(ma - 1)])
        row = a @ g
        val = float(np.abs(row).sum())
        if val > best:
            best = val

    x = np.zeros((n, n))
    y = x.copy()
    dual = x.copy()
    scale = np.linalg.norm(w)
    rho = scale if scale > 0 else 1.0
    stall = 0
    for it in range(1, max_iter + 1):
        x = y - dual + w / rho
        np.fill_diagonal(x, 1.0)
        x = (x + x.T) / 2
        np.fill_diagonal(x, 1.0)
        wv, v = np.linalg.eigh(x + dual)
        y = (v * np.clip(wv, 0.0, None)) @ v.T
        dual += x - y
        if it % 100 == 0:
            c = _gram_polish(w, y, iters=200)
            val = float(np.sum(w * c))
            if val > best + tol:
                best = val
                stall = 0
            else:
                stall += 1
            if stall >= 10:
                break
    c = _gram_polish(w, y)
    best = max(best, float(np.sum(w * c)))
    return best
