"""Quaternion arithmetic and the circle-quotient map nu(x) = conj(x) i x.

Imaginary quaternions are plain length-3 numpy arrays ``(i, j, k)``.  A target
point ``b`` in Im H (x) (R^n)^* is a ``(3, n)`` array whose column ``i`` is the
imaginary quaternion paired with the ``i``-th dual basis vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class NumericContext:
    """Tolerances shared across the package."""

    rel: float = 1e-12
    residual: float = 1e-10
    incidence: float = 1e-12


DEFAULT_CONTEXT = NumericContext()


@dataclass(frozen=True)
class Quaternion:
    re: float = 0.0
    i: float = 0.0
    j: float = 0.0
    k: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.components()):
            raise ValueError(f"non-finite quaternion {self.components()}")

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "Quaternion":
        a = [float(c) for c in a]
        if len(a) == 3:
            return cls(0.0, *a)
        return cls(*a)

    @classmethod
    def phase(cls, theta: float) -> "Quaternion":
        """The unit complex number e^{i theta}."""
        return cls(math.cos(theta), math.sin(theta), 0.0, 0.0)

    def components(self) -> tuple[float, float, float, float]:
        return (self.re, self.i, self.j, self.k)

    def as_array(self) -> np.ndarray:
        return np.array(self.components())

    @property
    def imag(self) -> np.ndarray:
        return np.array([self.i, self.j, self.k])

    def conj(self) -> "Quaternion":
        return Quaternion(self.re, -self.i, -self.j, -self.k)

    def norm2(self) -> float:
        return self.re**2 + self.i**2 + self.j**2 + self.k**2

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(a + b for a, b in zip(self.components(), other.components())))

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(*(a - b for a, b in zip(self.components(), other.components())))

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.re, -self.i, -self.j, -self.k)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            a1, b1, c1, d1 = self.components()
            a2, b2, c2, d2 = other.components()
            return Quaternion(
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            )
        s = float(other)
        return Quaternion(self.re * s, self.i * s, self.j * s, self.k * s)

    def __rmul__(self, other):
        # scalars commute with quaternions
        return self * other


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def nu(x: Quaternion) -> np.ndarray:
    """Return conj(x) i x as an imaginary quaternion; its norm is |x|^2."""
    a, b, c, d = x.components()
    return np.array([
        a * a + b * b - c * c - d * d,
        2.0 * (b * c - a * d),
        2.0 * (b * d + a * c),
    ])


def _nu_inverse_upper(v: np.ndarray) -> Quaternion:
    # valid for v[0] >= 0, where a^2 = (|v| + v_i)/2 >= |v|/2 keeps the division safe
    s = float(np.linalg.norm(v))
    if s == 0.0:
        return Quaternion()
    a = math.sqrt(0.5 * (s + v[0]))
    return Quaternion(a, 0.0, v[2] / (2.0 * a), -v[1] / (2.0 * a))


def nu_inverse(v: Sequence[float], phase: float = 0.0) -> Quaternion:
    """A preimage of ``v`` under :func:`nu`.

    The full preimage is the circle ``{e^{i theta} x}``; ``phase`` selects the
    point on it.  For ``v_i < 0`` the preimage is built as ``j * nu_inverse(-v)``
    (using ``nu(j z) = -nu(z)``), which contains the antipodal witness
    ``sqrt|v| j`` for ``v`` on the negative i-axis.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("nu_inverse expects an imaginary quaternion of length 3")
    if v[0] >= 0.0:
        x = _nu_inverse_upper(v)
    else:
        x = J * _nu_inverse_upper(-v)
    if phase:
        x = Quaternion.phase(phase) * x
    return x


def pair(b, u: Sequence[int]):
    """Evaluate ``b(u)``: the imaginary quaternion sum_i b[:, i] * u_i.

    Works on float arrays and on object arrays of ``Fraction`` (exact result).
    """
    b = np.asarray(b)
    if b.ndim != 2 or b.shape[0] != 3:
        raise ValueError(f"target point must have shape (3, n), got {b.shape}")
    if len(u) != b.shape[1]:
        raise ValueError(f"dimension mismatch: target has n={b.shape[1]}, weight has {len(u)}")
    if b.dtype == object:
        return tuple(sum((Fraction(b[c, i]) * int(u[i]) for i in range(len(u))), Fraction(0))
                     for c in range(3))
    return b @ np.asarray(u, dtype=float)


def im_basis(e: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (f1, f2) spanning e-perp with e * f1 = f2 (left multiplication)."""
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    trial = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    f1 = trial - e * (trial @ e)
    f1 /= np.linalg.norm(f1)
    # for orthogonal imaginary quaternions, e * f1 is the cross product
    f2 = np.cross(e, f1)
    return f1, f2


def join_target(x: Sequence[float], z: Sequence[complex], e: Sequence[float]) -> np.ndarray:
    """Assemble b = sum_i (x_i e + Re z_i f1 + Im z_i f2) (x) e_i^*."""
    e = np.asarray(e, dtype=float)
    f1, f2 = im_basis(e)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=complex)
    return np.outer(e, x) + np.outer(f1, z.real) + np.outer(f2, z.imag)


def split_target(b: np.ndarray, e: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`join_target`."""
    e = np.asarray(e, dtype=float)
    f1, f2 = im_basis(e)
    b = np.asarray(b, dtype=float)
    return e @ b, (f1 @ b) + 1j * (f2 @ b)
