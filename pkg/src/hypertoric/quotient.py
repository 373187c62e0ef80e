"""Finite truncations of the flat model: moment map, zero-set test, fibre points, stabilizers."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lattice
from .arrangement import Arrangement, kernel_lattice
from .core_algebra import Quaternion, nu, nu_inverse

ZERO_SET_TOL = 1e-10
INCIDENCE_TOL = 1e-12


@dataclass(frozen=True)
class QuotientPoint:
    coords: tuple[Quaternion, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    def __len__(self) -> int:
        return len(self.coords)

    def rotate(self, phases: Sequence[float]) -> "QuotientPoint":
        """Act by the torus: x_k -> e^{i theta_k} x_k."""
        return QuotientPoint(tuple(Quaternion.phase(t) * x for t, x in zip(phases, self.coords)))


@dataclass
class StabilizerReport:
    incident: list[int]
    basis: list[tuple[int, ...]]
    unimodular: bool | None = None

    @property
    def dimension(self) -> int:
        return len(self.incident)

    def to_dict(self) -> dict:
        return {"incident": self.incident, "basis": [list(u) for u in self.basis],
                "dimension": self.dimension, "unimodular": self.unimodular}


def _check_length(a: Arrangement, x: QuotientPoint):
    if len(x) != len(a.flats):
        raise ValueError(f"point has {len(x)} coordinates, arrangement has {len(a.flats)} flats")


def mu_Lambda(a: Arrangement, x: QuotientPoint) -> np.ndarray:
    """Rows lambda_k + nu(x_k)/2, one per flat; shape (m, 3)."""
    _check_length(a, x)
    if not a.flats:
        return np.zeros((0, 3))
    return np.array([f.lam_array + 0.5 * nu(xk) for f, xk in zip(a.flats, x.coords)])


def zero_set_residual(a: Arrangement, x: QuotientPoint) -> tuple[np.ndarray, float]:
    """Best a with a(u_k) = mu_k in the least-squares sense, and max_k |a(u_k) - mu_k|."""
    if not a.spans():
        raise ValueError("weights do not span R^n")
    mu = mu_Lambda(a, x)
    U = np.array([f.u for f in a.flats], dtype=float)
    sol, *_ = np.linalg.lstsq(U, mu, rcond=None)          # (n, 3)
    resid = float(np.max(np.linalg.norm(U @ sol - mu, axis=1)))
    return sol.T, resid


def in_zero_set(a: Arrangement, x: QuotientPoint, tol: float = ZERO_SET_TOL) -> bool:
    return zero_set_residual(a, x)[1] <= tol


def fiber_point(a: Arrangement, b, phases: Sequence[float] | None = None) -> QuotientPoint:
    """A point over b: x_k = nu^{-1}(2 (b(u_k) - lambda_k)) on the chosen phase circle."""
    b = np.asarray(b, dtype=float)
    if b.shape != (3, a.dimension):
        raise ValueError(f"target point must have shape (3, {a.dimension})")
    m = len(a.flats)
    if phases is None:
        phases = [0.0] * m
    if len(phases) != m:
        raise ValueError(f"need {m} phases, got {len(phases)}")
    coords = []
    for f, t in zip(a.flats, phases):
        v = 2.0 * (b @ np.asarray(f.u, dtype=float) - f.lam_array)
        coords.append(nu_inverse(v, t))
    return QuotientPoint(tuple(coords))


def stabilizer(a: Arrangement, b, tol: float = INCIDENCE_TOL, check_unimodular: bool = True) -> StabilizerReport:
    """Flats through b; the stabilizer subtorus is spanned by their weights."""
    b = np.asarray(b)
    incident = []
    for k, f in enumerate(a.flats):
        if b.dtype == object and f.exact:
            hit = all(sum((Fraction(b[c, i]) * f.u[i] for i in range(a.dimension)), Fraction(0))
                      == f.lam[c] for c in range(3))
        else:
            bf = np.asarray(b, dtype=float)
            hit = np.linalg.norm(bf @ f.u_hat - f.lam_hat) <= tol * (1.0 + np.linalg.norm(f.lam_hat))
        if hit:
            incident.append(k)
    basis = [a.flats[k].u for k in incident]
    unimodular = lattice.extends_to_basis(basis, a.dimension) if check_unimodular else None
    return StabilizerReport(incident, basis, unimodular)


def quotient_dimension(a: Arrangement) -> int:
    """Real dimension 4m - 4 rank(ker beta) of the truncated quotient; equals 4n."""
    m = len(a.flats)
    k = kernel_lattice(a).rank
    d = 4 * m - 4 * k
    if d != 4 * a.dimension:
        raise AssertionError(f"kernel rank {k} inconsistent with m={m}, n={a.dimension}")
    return d
