from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from hypertoric.arrangement import (Arrangement, FamilyGenerator, Flat, condition_a, condition_b,
                                    convergence_check, intersection, is_smooth, kernel_lattice,
                                    monomial_tail_bound, smallest_index, validate_primitive,
                                    weight_normal_form)
from hypertoric.io import load_arrangement

from .helpers import SAMPLES, random_unimodular


def test_flat_sign_convention():
    assert Flat((1, -2), (1, 0, 0)).same_subspace(Flat((-1, 2), (-1, 0, 0)))
    assert not Flat((1, 0), (1, 0, 0)).same_subspace(Flat((1, 0), (-1, 0, 0)))


def test_duplicate_flats_rejected():
    with pytest.raises(ValueError):
        Arrangement(1, (Flat((1,), (0, 0, 0)), Flat((-1,), (0, 0, 0))))


def test_taub_nut_must_be_psd():
    with pytest.raises(ValueError):
        Arrangement(1, (Flat((1,), (0, 0, 0)),), (), ((-1,),))


def test_validate_primitive_reports_gcd():
    a = Arrangement(2, (Flat((2, 0), (0, 0, 0)), Flat((0, 1), (0, 0, 0))))
    r = validate_primitive(a)
    assert not r.ok and r.non_primitive[0]["gcd"] == 2


def test_det2_pair_violates_b():
    a = load_arrangement(SAMPLES / "det2_violation.json")
    rb = condition_b(a)
    assert not rb.ok and rb.violations[0]["det"] == 2
    assert condition_a(a).ok


def test_three_concurrent_lines_violate_a():
    a = Arrangement(2, (Flat((1, 0), (0, 0, 0)), Flat((0, 1), (0, 0, 0)), Flat((1, 1), (0, 0, 0))))
    ra = condition_a(a)
    assert not ra.ok
    assert ra.violations[0]["count"] == 3
    assert ra.violations[0]["point"] == [["0", "0"]] * 3


def test_dependent_triple_through_a_line_in_n3():
    a = Arrangement(3, (Flat((1, 0, 0), (0, 0, 0)), Flat((0, 1, 0), (0, 0, 0)),
                        Flat((1, 1, 0), (0, 0, 0)), Flat((0, 0, 1), (0, 0, 0))))
    assert not condition_b(a).ok


def test_intersection_exact_and_float():
    f1, f2 = Flat((1, 0), (1, 0, 0)), Flat((1, 1), (F(1, 2), 0, 0))
    p = intersection([f1, f2])
    assert p[0, 0] == 1 and p[0, 1] == F(-1, 2)
    q = intersection([Flat((1, 0), (1.0, 0, 0)), Flat((1, 1), (0.5, 0, 0))])
    assert np.allclose(q[0], [1.0, -0.5])
    assert intersection([Flat((1, 0), (0, 0, 0)), Flat((1, 0), (1, 0, 0))]) is None


@pytest.mark.parametrize("name,smooth", [("flat_h", True), ("a1_eguchi_hanson", True),
                                         ("toric_n2", True), ("goto_n2_truncated", True),
                                         ("det2_violation", False)])
def test_samples_smoothness(name, smooth):
    assert is_smooth(load_arrangement(SAMPLES / f"{name}.json")) == smooth


def test_goto_families_certified():
    a = load_arrangement(SAMPLES / "goto_n2.json")
    ra, rb = condition_a(a, 2000), condition_b(a, 2000)
    assert ra.ok and rb.ok and ra.certified and rb.certified


def test_family_overlap_detected():
    g = FamilyGenerator((1,), (0, 0, 0), (1, 0, 0), 1, 2)
    with pytest.raises(ValueError):
        Arrangement(1, (Flat((1,), (4, 0, 0)),), (g,))
    assert g.index_of((9, 0, 0)) == 3 and g.index_of((8, 0, 0)) is None


def test_convergence_verdicts():
    h = load_arrangement(SAMPLES / "hattori.json")
    lin = load_arrangement(SAMPLES / "linear_family.json")
    vh = convergence_check(h).families[0]
    assert vh.converges and vh.tail_bound < 1e-8
    vl = convergence_check(lin).families[0]
    assert not vl.converges and vl.partial_sum > 10
    # the witness is the first N with partial sum above 10
    k = np.arange(1, vl.N + 1)
    s = np.cumsum(1.0 / (1.0 + k))
    assert s[-1] > 10 and s[-2] <= 10


@given(st.integers(1, 10**6), st.floats(1.1, 4), st.floats(0.1, 5))
def test_monomial_tail_bound_dominates_sum(N, p, s):
    # the bound is an upper bound for the true tail, checked against a long partial tail
    k = np.arange(N + 1, N + 200001, dtype=float)
    partial = np.sum(1.0 / (s * k**p))
    assert partial <= monomial_tail_bound(N, 1.0, s, p, 0.0) * (1 + 1e-12)


def test_smallest_index():
    assert smallest_index(lambda n: n * n >= 1000) == 32
    assert smallest_index(lambda n: True) == 1


def test_kernel_lattice_against_sympy():
    a = load_arrangement(SAMPLES / "toric_n2.json")
    kr = kernel_lattice(a)
    B = sympy.Matrix([list(f.u) for f in a.flats]).T
    assert kr.rank == len(B.nullspace()) == 2
    assert all((B * sympy.Matrix(v)).is_zero_matrix for v in kr.basis)
    assert kr.surjective
    b = kernel_lattice(Arrangement(1, (Flat((2,), (0, 0, 0)),)))
    assert not b.surjective and b.rank == 0


@given(st.integers(0, 10**6))
def test_normal_form_of_random_unimodular(seed):
    a = random_unimodular(np.random.default_rng(seed))
    assert condition_b(a).ok
    nf = weight_normal_form(a)
    assert nf.ok
    assert nf.distinct_count <= 3 ** a.dimension
