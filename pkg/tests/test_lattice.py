from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from hypertoric import lattice

small = st.integers(-6, 6)


def matrices(rows, cols):
    return st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@given(st.integers(1, 5).flatmap(lambda n: matrices(n, n)))
def test_int_det_matches_sympy(M):
    assert lattice.int_det(M) == sympy.Matrix(M).det()


@given(st.integers(1, 4).flatmap(lambda r: st.integers(1, 5).flatmap(lambda c: matrices(r, c))))
def test_rank_and_rref_match_sympy(M):
    R, piv = lattice.rref(M)
    S, spiv = sympy.Matrix(M).rref()
    assert tuple(piv) == spiv
    assert [[sympy.Rational(x.numerator, x.denominator) for x in row] for row in R] == S.tolist()
    assert lattice.rank(M) == sympy.Matrix(M).rank()


@given(st.integers(1, 3).flatmap(lambda n: st.integers(n, n + 3).flatmap(lambda m: matrices(n, m))))
def test_column_hermite_kernel(B):
    H, U, r = lattice.column_hermite(B)
    n, m = len(B), len(B[0])
    assert abs(sympy.Matrix(U).det()) == 1
    assert sympy.Matrix(B) * sympy.Matrix(U) == sympy.Matrix(H)
    assert all(H[i][j] == 0 for i in range(n) for j in range(r, m))
    assert r == sympy.Matrix(B).rank()
    # kernel columns: right rank, and saturated because U is unimodular
    K = sympy.Matrix([[U[i][j] for j in range(r, m)] for i in range(m)])
    assert (sympy.Matrix(B) * K).is_zero_matrix if m > r else True
    assert m - r == len(sympy.Matrix(B).nullspace())


def test_int_inverse_unimodular():
    A = [[2, 1], [1, 1]]
    inv = lattice.int_inverse_unimodular(A)
    assert sympy.Matrix(A) * sympy.Matrix(inv) == sympy.eye(2)
    with pytest.raises(ValueError):
        lattice.int_inverse_unimodular([[2, 0], [0, 1]])


def test_extends_to_basis():
    assert lattice.extends_to_basis([(1, 0)], 2)
    assert lattice.extends_to_basis([(2, 3)], 2)
    assert not lattice.extends_to_basis([(2, 4)], 2)
    assert not lattice.extends_to_basis([(1, 0), (1, 2)], 2)
    assert lattice.extends_to_basis([(1, 1, 0), (0, 1, 1)], 3)
    assert not lattice.extends_to_basis([(1, 0), (0, 1), (1, 1)], 2)


def test_primitive_and_solve():
    assert lattice.is_primitive((3, 5)) and not lattice.is_primitive((4, 6))
    assert lattice.express_in_basis([(1, 0), (1, 2)], (3, 4)) == [Fraction(1), Fraction(2)]
    assert lattice.express_in_basis([(1, 0)], (0, 1)) is None
    assert lattice.solve_rational([[1, 1], [1, -1]], [3, 1]) == [Fraction(2), Fraction(1)]
