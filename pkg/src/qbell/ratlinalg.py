"""Exact rational linear algebra: PSD tests, rank, and LP feasibility.

All routines work on lists of ``fractions.Fraction`` (or ints) and make
exact claims; nothing here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction


def _as_matrix(m):
    return [[Fraction(v) for v in row] for row in m]


def is_psd_rational(matrix) -> bool:
    """Exact PSD decision by pivoted LDL^T elimination.

    At each step any strictly positive diagonal entry may serve as pivot.
    If no positive pivot remains, the matrix is PSD iff the remaining
    active block is identically zero (a PSD matrix with zero diagonal has
    zero rows).  Negative diagonal at any point means not PSD.
    """
    a = _as_matrix(matrix)
    n = len(a)
    for row in a:
        if len(row) != n:
            raise ValueError("matrix not square")
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j] != a[j][i]:
                raise ValueError("matrix not symmetric")
    active = list(range(n))
    while active:
        pivot = None
        for i in active:
            if a[i][i] < 0:
                return False
            if pivot is None and a[i][i] > 0:
                pivot = i
        if pivot is None:
            # all active diagonal entries are zero
            return all(a[i][j] == 0 for i in active for j in active)
        active.remove(pivot)
        d = a[pivot][pivot]
        for i in active:
            if a[i][pivot] == 0:
                continue
            f = a[i][pivot] / d
            for j in active:
                a[i][j] -= f * a[pivot][j]
        for i in active:
            a[i][pivot] = a[pivot][i] = Fraction(0)
    return True


def rational_rank(rows) -> int:
    """Rank over the rationals by Gaussian elimination."""
    m = _as_matrix(rows)
    if not m:
        return 0
    n_cols = len(m[0])
    rank = 0
    col = 0
    while rank < len(m) and col < n_cols:
        pivot_row = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot_row is None:
            col += 1
            continue
        m[rank], m[pivot_row] = m[pivot_row], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, len(m)):
            if m[r][col] != 0:
                f = m[r][col] / pv
                for c in range(col, n_cols):
                    m[r][c] -= f * m[rank][c]
        rank += 1
        col += 1
    return rank


class Infeasible(Exception):
    """Raised with an exact Farkas certificate attached."""

    def __init__(self, farkas):
        super().__init__("linear system infeasible")
        self.farkas = farkas


def solve_feasibility(a_rows, b_col):
    """Find x >= 0 with A x = b (exact), or raise :class:`Infeasible`.

    Phase-1 simplex with Bland's rule over exact rationals.  On success
    returns the list x.  On failure the exception carries a vector y with
    y^T A <= 0 and y^T b > 0 (verified before raising).
    """
    a = _as_matrix(a_rows)
    b = [Fraction(v) for v in b_col]
    m = len(a)
    if m == 0:
        return []
    n = len(a[0])
    # normalize to b >= 0, remembering flipped rows for the certificate
    flip = [1] * m
    for i in range(m):
        if b[i] < 0:
            b[i] = -b[i]
            a[i] = [-v for v in a[i]]
            flip[i] = -1
    # tableau columns: n structural + m artificial, basis starts artificial
    tab = [a[i] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    n_total = n + m

    def reduced_costs():
        # phase-1 objective: sum of artificials
        z = [Fraction(0)] * (n_total + 1)
        for i, bi in enumerate(basis):
            if bi >= n:
                for j in range(n_total + 1):
                    z[j] += tab[i][j]
        return [Fraction(int(j >= n)) - z[j] for j in range(n_total)], z[n_total]

    while True:
        costs, obj = reduced_costs()
        enter = next((j for j in range(n_total) if costs[j] < 0), None)
        if enter is None:
            break
        # Bland: leaving row = min ratio, ties by smallest basis index
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][n_total] / tab[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise RuntimeError("phase-1 objective unbounded; cannot happen")
        _, leave = best
        pv = tab[leave][enter]
        tab[leave] = [v / pv for v in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [vi - f * vl for vi, vl in zip(tab[i], tab[leave])]
        basis[leave] = enter

    _, artificial_mass = reduced_costs()
    if artificial_mass == 0:
        x = [Fraction(0)] * n
        for i, bi in enumerate(basis):
            if bi < n:
                x[bi] = tab[i][n_total]
        return x
    # infeasible: y = c_B B^{-1} read off the artificial columns
    y = [Fraction(0)] * m
    for j in range(m):
        for i, bi in enumerate(basis):
            if bi >= n:
                y[j] += tab[i][n + j]
    # verify the Farkas certificate exactly against the sign-normalized system
    assert sum(yi * bi for yi, bi in zip(y, b)) > 0
    for j in range(n):
        assert sum(y[i] * a[i][j] for i in range(m)) <= 0
    raise Infeasible([s * yi for s, yi in zip(flip, y)])
