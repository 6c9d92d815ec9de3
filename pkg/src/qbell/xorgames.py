"""Sign-vector games whose quantum and classical biases coincide.

The family is built from the unique general-position sign vectors on the
ma + mb inputs: game entry (i,j) is the sign of the inner product of the
extended rows (1, i~) and (-1, j~), where i~ is the +/-1 binary expansion of
i-1.  Everything stays in exact integers; floats only enter through the
elliptope SDP for the quantum bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAME_SIZE_CAP = 4096


def lexicographic_vectors(r: int, rows: int) -> list:
    """Sign vectors v_1..v_r whose first 2^r rows run through all sign
    patterns lexicographically (+1 before -1); v_j alternates blocks of
    length 2^(r-j), repeating past row 2^r."""
    if r < 1:
        raise ValueError("r >= 1")
    if 2**r > rows:
        raise ValueError("need 2^r <= rows")
    out = []
    for j in range(1, r + 1):
        block = 2 ** (r - j)
        v = np.array([1 if (i // block) % 2 == 0 else -1 for i in range(rows)],
                     dtype=np.int64)
        out.append(v)
    return out


def general_position_check(vectors: list) -> bool:
    """Whether every signed Hadamard product prod_j (1 +/- v_j) is nonzero.

    The product over j picks rows matching one sign pattern, so the check
    amounts to every pattern in {+1,-1}^r appearing among the rows.
    """
    r = len(vectors)
    if r == 0 or r > 20:
        raise ValueError("need 1 <= |R| <= 20")
    rows = len(vectors[0])
    if any(len(v) != rows for v in vectors):
        raise ValueError("vectors must share their length")
    arr = np.array(vectors, dtype=np.int64)
    masks = np.zeros(rows, dtype=np.int64)
    for j in range(r):
        masks |= ((arr[j] == 1).astype(np.int64)) << j
    return len(set(masks.tolist())) == 2**r


def star(u, v) -> int:
    """Sign of the inner product; 0 on ties."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape:
        raise ValueError("length mismatch")
    s = int(u @ v)
    return (s > 0) - (s < 0)


def signed_binary(i: int, k: int) -> np.ndarray:
    """The +/-1 expansion of i-1 over k bits, most significant first (0 -> +1)."""
    bits = [(i - 1) >> (k - 1 - b) & 1 for b in range(k)]
    return np.array([1 - 2 * b for b in bits], dtype=np.int64)


def build_game(k: int) -> np.ndarray:
    """The 2^k x 2^k game matrix with entries (1, i~) * (-1, j~)."""
    if k < 2:
        raise ValueError("the family starts at k = 2")
    n = 2**k
    if n > GAME_SIZE_CAP:
        raise ValueError("game size cap exceeded")
    rows = [signed_binary(i, k) for i in range(1, n + 1)]
    g = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        left = np.concatenate(([1], rows[i]))
        for j in range(n):
            right = np.concatenate(([-1], rows[j]))
            g[i, j] = star(left, right)
    return g


def build_game_from_vectors(k: int) -> np.ndarray:
    """Same matrix from the lexicographic vectors over the 2^(k+1) inputs."""
    n = 2**k
    vs = lexicographic_vectors(k + 1, 2 * n)
    rows = np.array(vs, dtype=np.int64).T
    g = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            g[i, j] = star(rows[i], rows[n + j])
    return g


def corner(g: np.ndarray, x: int) -> np.ndarray:
    """Top-left x-by-x corner block."""
    return g[:x, :x]


def corner_bar(g: np.ndarray, x: int) -> np.ndarray:
    """Top-right x-by-x corner block."""
    return g[:x, g.shape[1] - x:]


@dataclass(frozen=True)
class BlockReport:
    ok: bool
    failures: tuple  # (description, block row, block col) of the first mismatches

    def __bool__(self):
        return self.ok


def verify_block_structure(g: np.ndarray, k: int) -> BlockReport:
    """Check the 4x4 block layout and the recursive corner refinements.

    The sixteen blocks of size 2^(k-2) consist of the smaller game on the
    off-pattern positions, one repeated block A on the diagonal and one
    repeated block B on the anti-diagonal; A and B refine recursively via
    corner blocks of the smaller game down to 1x1 blocks (1) and (-1).
    """
    if k < 2:
        raise ValueError("k >= 2 required")
    n = 2**k
    if g.shape != (n, n):
        raise ValueError("matrix size does not match k")
    failures = []
    if k < 4:
        # only the corner extraction is defined this small
        a = corner(g, 1)
        b = corner_bar(g, 1)
        if a[0, 0] != 1:
            failures.append(("corner A1", 0, 0))
        if b[0, 0] != -1:
            failures.append(("corner B1", 0, 0))
        return BlockReport(not failures, tuple(failures))
    q = n // 4
    blocks = [[g[r * q:(r + 1) * q, c * q:(c + 1) * q] for c in range(4)]
              for r in range(4)]
    small = build_game(k - 2)
    game_positions = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)]
    for (r, c) in game_positions:
        if not np.array_equal(blocks[r][c], small):
            failures.append(("off-pattern block != smaller game", r, c))
    a_block = blocks[0][0]
    for (r, c) in [(1, 1), (2, 2), (3, 3)]:
        if not np.array_equal(blocks[r][c], a_block):
            failures.append(("diagonal blocks differ", r, c))
    b_block = blocks[0][3]
    for (r, c) in [(1, 2), (2, 1), (3, 0)]:
        if not np.array_equal(blocks[r][c], b_block):
            failures.append(("anti-diagonal blocks differ", r, c))

    def check_a(block, size):
        if size == 1:
            if block[0, 0] != 1:
                failures.append(("A recursion base", 0, 0))
            return
        h = size // 2
        if not np.array_equal(block[:h, h:], corner(small, h)) or \
           not np.array_equal(block[h:, :h], corner(small, h)):
            failures.append(("A off-diagonal corner", size, size))
        if not np.array_equal(block[:h, :h], block[h:, h:]):
            failures.append(("A diagonal halves differ", size, size))
        check_a(block[:h, :h], h)

    def check_b(block, size):
        if size == 1:
            if block[0, 0] != -1:
                failures.append(("B recursion base", 0, 0))
            return
        h = size // 2
        if not np.array_equal(block[:h, :h], corner_bar(small, h)) or \
           not np.array_equal(block[h:, h:], corner_bar(small, h)):
            failures.append(("B diagonal corner", size, size))
        if not np.array_equal(block[:h, h:], block[h:, :h]):
            failures.append(("B off-diagonal halves differ", size, size))
        check_b(block[:h, h:], h)

    check_a(a_block, q)
    check_b(b_block, q)
    return BlockReport(not failures, tuple(failures))


def hadamard(k: int) -> np.ndarray:
    """Unnormalized Sylvester Hadamard matrix: H H^T = 2^k I, exact integers."""
    h = np.array([[1]], dtype=np.int64)
    for _ in range(k):
        h = np.block([[h, h], [h, -h]])
    return h


def hadamard_conjugate(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    k = n.bit_length() - 1
    if 2**k != n:
        raise ValueError("size must be a power of two")
    h = hadamard(k)
    return h @ np.asarray(m, dtype=np.int64) @ h


def is_diagonal_in_hadamard_basis(m: np.ndarray) -> bool:
    """H M H has zero off-diagonal entries (exact integer arithmetic)."""
    conj = hadamard_conjugate(m)
    off = conj - np.diag(np.diag(conj))
    return not off.any()


def classical_bias(g: np.ndarray) -> int:
    """max over +/-1 vectors a, b of a^T G b, exact.

    Bob's side is optimized analytically (sign trick), Alice's side is
    enumerated over 2^(ma-1) assignments after fixing the global sign.
    """
    g = np.asarray(g, dtype=np.int64)
    ma = g.shape[0]
    if 2**ma > GAME_SIZE_CAP:
        raise ValueError("enumeration cap exceeded")
    best = 0
    for mask in range(1 << (ma - 1)):
        a = np.array([1] + [1 - 2 * ((mask >> i) & 1) for i in range(ma - 1)],
                     dtype=np.int64)
        best = max(best, int(np.abs(a @ g).sum()))
    return best


def game_to_csv(g: np.ndarray) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in g) + "\n"
