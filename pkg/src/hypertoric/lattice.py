"""Exact integer and rational linear algebra on small dense matrices.

Matrices are lists of rows.  Everything here is pure Python integers or
``Fraction`` so results do not depend on floating point.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Sequence


def int_det(M: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix (Bareiss fraction-free elimination)."""
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    if n == 0:
        return 1
    if any(len(row) != n for row in A):
        raise ValueError("int_det needs a square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def gcd_all(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    return g


def is_primitive(u: Sequence[int]) -> bool:
    return gcd_all(u) == 1


def rref(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (matrix, pivot columns)."""
    A = [[Fraction(x) for x in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        piv = A[r][c]
        A[r] = [x / piv for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A, pivots


def rank(M: Sequence[Sequence]) -> int:
    if not M:
        return 0
    return len(rref(M)[1])


def independent_rows(M: Sequence[Sequence]) -> list[int]:
    """Indices of a maximal set of linearly independent rows (greedy, in order)."""
    chosen: list[int] = []
    for i in range(len(M)):
        if rank([M[j] for j in chosen + [i]]) == len(chosen) + 1:
            chosen.append(i)
    return chosen


def express_in_basis(basis: Sequence[Sequence[int]], v: Sequence[int]) -> list[Fraction] | None:
    """Coefficients c with sum_j c_j basis[j] = v, or None when v is not in the span.

    ``basis`` must be linearly independent.
    """
    m = len(basis)
    n = len(v)
    # columns are basis vectors, augmented with v
    aug = [[Fraction(basis[j][i]) for j in range(m)] + [Fraction(v[i])] for i in range(n)]
    R, piv = rref(aug)
    if m in piv:
        return None
    coeffs = [Fraction(0)] * m
    for row, c in zip(R, piv):
        coeffs[c] = row[m]
    return coeffs


def solve_rational(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Least-norm exact solution of A x = b, or None if inconsistent."""
    rows = independent_rows(A)
    Ab = [list(A[i]) for i in rows]
    bb = [Fraction(b[i]) for i in rows]
    r = len(rows)
    n = len(A[0])
    # x = A_B^T (A_B A_B^T)^{-1} b_B is the least-norm solution on the independent rows
    G = [[sum(Fraction(Ab[i][k]) * Ab[j][k] for k in range(n)) for j in range(r)] for i in range(r)]
    aug = [G[i] + [bb[i]] for i in range(r)]
    R, _ = rref(aug) if r else ([], [])
    y = [R[i][r] for i in range(r)]
    x = [sum((Fraction(Ab[i][k]) * y[i] for i in range(r)), Fraction(0)) for k in range(n)]
    for i in range(len(A)):
        if sum((Fraction(A[i][k]) * x[k] for k in range(n)), Fraction(0)) != Fraction(b[i]):
            return None
    return x


def int_inverse_unimodular(A: Sequence[Sequence[int]]) -> list[list[int]]:
    """Inverse of an integer matrix with determinant +-1."""
    d = int_det(A)
    if abs(d) != 1:
        raise ValueError(f"matrix is not unimodular (det {d})")
    n = len(A)
    aug = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    R, _ = rref(aug)
    inv = [[R[i][n + j] for j in range(n)] for i in range(n)]
    return [[int(x) for x in row] for row in inv]


def column_hermite(B: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], int]:
    """Unimodular column reduction: returns (H, U, r) with B U = H.

    H is in column echelon form with its first ``r`` columns non-zero and the
    remaining columns zero, so columns r.. of U are a basis of the integer
    kernel lattice of B.
    """
    n = len(B)
    m = len(B[0]) if n else 0
    H = [[int(x) for x in row] for row in B]
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for M in (H, U):
            for row in M:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    r = 0
    for row in range(n):
        if r == m:
            break
        for j in range(r + 1, m):
            a, b = H[row][r], H[row][j]
            if b == 0:
                continue
            g, s, t = _xgcd(a, b)
            # [s t; -b/g a/g] has determinant 1
            colop(r, j, s, t, -b // g, a // g)
        if H[row][r] != 0:
            if H[row][r] < 0:
                for M in (H, U):
                    for line in M:
                        line[r] = -line[r]
            r += 1
    return H, U, r


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def extends_to_basis(vectors: Sequence[Sequence[int]], n: int) -> bool:
    """True when the integer vectors are part of a Z-basis of Z^n."""
    r = len(vectors)
    if r == 0:
        return True
    if r > n:
        return False
    g = 0
    for cols in combinations(range(n), r):
        g = math.gcd(g, int_det([[v[c] for c in cols] for v in vectors]))
        if g == 1:
            return True
    return False
