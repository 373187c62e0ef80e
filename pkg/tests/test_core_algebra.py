import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypertoric.core_algebra import (I, J, K, ONE, Quaternion, im_basis, join_target, nu,
                                     nu_inverse, pair, split_target)

reals = st.floats(-10, 10, allow_nan=False)
quats = st.builds(Quaternion, reals, reals, reals, reals)
vec3 = st.lists(reals, min_size=3, max_size=3).map(np.array)


def as_matrix(q: Quaternion) -> np.ndarray:
    """Independent oracle: the 2x2 complex representation of H."""
    a, b, c, d = q.components()
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def test_units():
    assert I * J == K and J * K == I and K * I == J
    assert I * I == -ONE and J * J == -ONE and K * K == -ONE
    assert J * I == -K


@given(quats, quats)
def test_product_matches_matrix_oracle(p, q):
    assert np.allclose(as_matrix(p * q), as_matrix(p) @ as_matrix(q), atol=1e-9)


@given(quats)
def test_nu_matches_matrix_oracle(x):
    m = as_matrix(x.conj()) @ as_matrix(I) @ as_matrix(x)
    # imaginary part (i, j, k) of a 2x2 quaternion matrix
    v = np.array([m[0, 0].imag, m[0, 1].real, m[0, 1].imag])
    assert np.allclose(nu(x), v, atol=1e-9)
    assert math.isclose(np.linalg.norm(nu(x)), x.norm2(), rel_tol=1e-9, abs_tol=1e-9)


@given(vec3, st.floats(-7, 7))
def test_nu_inverse_is_a_preimage(v, theta):
    x = nu_inverse(v, theta)
    assert np.allclose(nu(x), v, atol=1e-9 * (1 + np.linalg.norm(v)))


@given(quats, st.floats(-7, 7))
def test_nu_is_phase_invariant(x, theta):
    assert np.allclose(nu(Quaternion.phase(theta) * x), nu(x), atol=1e-8)


def test_nu_inverse_negative_axis():
    x = nu_inverse([-4.0, 0.0, 0.0])
    assert np.allclose(x.as_array(), [0, 0, 2, 0])
    assert nu_inverse([0, 0, 0]).norm() == 0.0


def test_nu_inverse_rejects_bad_shape():
    with pytest.raises(ValueError):
        nu_inverse([1.0, 2.0])
    with pytest.raises(ValueError):
        Quaternion(math.nan)


def test_pair_exact_and_float():
    from fractions import Fraction as F
    b = np.array([[F(1, 2), F(1, 3)], [0, 1], [F(-1), 0]], dtype=object)
    assert pair(b, (2, 3)) == (F(2), F(3), F(-2))
    assert np.allclose(pair(b.astype(float), (2, 3)), [2, 3, -2])
    with pytest.raises(ValueError):
        pair(b, (1,))


@given(vec3.filter(lambda e: np.linalg.norm(e) > 1e-3))
def test_im_basis_orthonormal_and_oriented(e):
    f1, f2 = im_basis(e)
    eh = e / np.linalg.norm(e)
    assert np.allclose(np.array([eh, f1, f2]) @ np.array([eh, f1, f2]).T, np.eye(3), atol=1e-12)
    prod = Quaternion.from_array(eh) * Quaternion.from_array(f1)
    assert np.allclose(prod.as_array(), [0, *f2], atol=1e-12)


@given(st.lists(reals, min_size=2, max_size=2), st.lists(reals, min_size=4, max_size=4))
def test_join_split_round_trip(x, zz):
    z = np.array(zz[:2]) + 1j * np.array(zz[2:])
    e = np.array([0.3, -0.4, np.sqrt(0.75)])
    x2, z2 = split_target(join_target(x, z, e), e)
    assert np.allclose(x2, x) and np.allclose(z2, z)
