"""Gibbons-Hawking type potentials, the polyharmonic function F and the metric matrix.

A 4d potential is ``V(p) = c + 1/2 sum_k w_k / |p - q_k|`` on Im H = R^3.  The
higher-dimensional metric is ``V_ij = T_ij + sum_k a_k u_i u_j / r_k`` with unit
weights u, which is the x-Hessian of

    F = sum_k a_k (s_k log(s_k + r_k) - r_k) + sum_ij c_ij (4 x_i x_j - 2 Re z_i conj z_j)

with ``c_ij = T_ij / 8``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arrangement import Arrangement, FamilyGenerator, Flat, monomial_tail_bound, smallest_index
from .core_algebra import join_target

DEFAULT_TOL = 1e-6
DEFAULT_STEP = 1e-3
CHUNK = 1 << 18
MAX_TERMS = 10**9


# ---------------------------------------------------------------------------
# distances to flats


def r_k(b: np.ndarray, f: Flat) -> float:
    """Distance ||b(u^) - lambda^|| of b from the flat."""
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(b @ f.u_hat - f.lam_hat))


def s_k(b: np.ndarray, f: Flat, e: Sequence[float]) -> float:
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError("e must be a unit imaginary quaternion")
    b = np.asarray(b, dtype=float)
    return float(e @ (b @ f.u_hat - f.lam_hat))


# ---------------------------------------------------------------------------
# slice potentials


@dataclass(frozen=True)
class PointFamily:
    """Points base + scale * k**power * direction (k >= 1), each with the same weight."""

    base: tuple[float, float, float]
    direction: tuple[float, float, float]
    scale: float
    power: float
    weight: float

    def points(self, start: int, stop: int) -> np.ndarray:
        k = np.arange(start, stop, dtype=float)
        t = self.scale * k ** self.power
        return np.asarray(self.base)[None, :] + t[:, None] * np.asarray(self.direction)[None, :]

    def terms_for(self, P: np.ndarray, tol: float) -> int:
        """Number of terms after which 1/2 sum w/|p - q_k| has tail < tol for all p in P."""
        if self.power <= 1.0:
            raise ValueError("divergent point family (power <= 1)")
        off = float(np.max(np.linalg.norm(P - np.asarray(self.base), axis=1)))
        bound = lambda N: monomial_tail_bound(N, 0.5 * self.weight, self.scale, self.power, off)
        return smallest_index(lambda N: bound(N) < tol)

    def tail_bound(self, P: np.ndarray, N: int) -> float:
        off = float(np.max(np.linalg.norm(P - np.asarray(self.base), axis=1)))
        return monomial_tail_bound(N, 0.5 * self.weight, self.scale, self.power, off)


@dataclass(frozen=True)
class SlicePotential:
    points: np.ndarray
    weights: np.ndarray
    c: float = 0.0
    families: tuple[PointFamily, ...] = ()

    def __post_init__(self):
        Z = np.asarray(self.points, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(Z) != len(w):
            raise ValueError("points and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if self.c < 0:
            raise ValueError("constant term must be non-negative")
        for i in range(len(Z)):
            if np.any(np.all(Z[i + 1:] == Z[i], axis=1)):
                raise ValueError(f"point {Z[i]} repeated")
        Z.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", Z)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "families", tuple(self.families))

    @classmethod
    def single(cls, q=(0.0, 0.0, 0.0), c: float = 0.0) -> "SlicePotential":
        return cls(np.array([q], dtype=float), np.ones(1), c)

    def with_point(self, q, weight: float = 1.0) -> "SlicePotential":
        return SlicePotential(np.vstack([self.points, np.asarray(q, float)[None, :]]),
                              np.append(self.weights, weight), self.c, self.families)

    def terms_for(self, P: np.ndarray, tol: float) -> list[int]:
        share = tol / max(1, len(self.families))
        return [fam.terms_for(P, share) for fam in self.families]


def _newton_sum(P: np.ndarray, Q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_k w_k / |p - q_k| for every row p of P, summed in index order."""
    out = np.zeros(len(P))
    for start in range(0, len(Q), CHUNK):
        d = np.linalg.norm(P[:, None, :] - Q[None, start:start + CHUNK, :], axis=2)
        out += (w[None, start:start + CHUNK] / d).sum(axis=1)
    return out


def _family_sum(P: np.ndarray, fam: PointFamily, N: int) -> np.ndarray:
    out = np.zeros(len(P))
    step = max(1, CHUNK // max(1, len(P)))
    for start in range(1, N + 1, step):
        Q = fam.points(start, min(N + 1, start + step))
        out += (1.0 / np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)).sum(axis=1)
    return fam.weight * out


def potential_values(s: SlicePotential, P, tol: float = DEFAULT_TOL,
                     terms: Sequence[int] | None = None) -> tuple[np.ndarray, float]:
    """V at each row of P with a common family truncation; returns (values, tail bound)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if len(s.points):
        dmin = np.linalg.norm(P[:, None, :] - s.points[None, :, :], axis=2).min()
        if dmin == 0.0:
            raise ValueError("potential evaluated at a singular point")
    if terms is None:
        terms = s.terms_for(P, tol)
    total = _newton_sum(P, s.points, s.weights)
    tail = 0.0
    for fam, N in zip(s.families, terms):
        if N > MAX_TERMS:
            raise ValueError(f"family needs {N} terms for the requested tolerance")
        total += _family_sum(P, fam, N)
        tail += fam.tail_bound(P, N)
    return s.c + 0.5 * total, tail


def potential_V(s: SlicePotential, p, tol: float = DEFAULT_TOL) -> float:
    """c + 1/2 sum_k w_k / |p - q_k| with the family tail below ``tol``."""
    vals, _ = potential_values(s, np.asarray(p, dtype=float)[None, :], tol)
    return float(vals[0])


def slice(a: Arrangement, base, alpha: Sequence[int], scale: float = 1.0) -> SlicePotential:
    """Restrict to the 3d affine slice {base + q (x) alpha}.

    Each flat with alpha(u_k) != 0 meets the slice at q_k = (lambda_k - base(u_k)) / alpha(u_k);
    the weights 1/|alpha| make ``potential_V`` equal to the sum of |alpha^(u^_k)| / r_k.
    Flats with alpha(u_k) = 0 contribute nothing unless the slice lies inside them, which
    is rejected.
    """
    n = a.dimension
    alpha = np.asarray(alpha)
    if alpha.shape != (n,) or not np.any(alpha):
        raise ValueError("alpha must be a non-zero covector of length n")
    if np.any(alpha != np.round(alpha)):
        raise ValueError("alpha must be integral")
    base = np.asarray(base, dtype=float).reshape(3, n)
    na = float(np.linalg.norm(alpha))
    w0 = scale / na
    pts, wts = [], []
    for i, f in enumerate(a.flats):
        au = int(np.dot(alpha, f.u))
        bu = base @ np.asarray(f.u, dtype=float)
        if au == 0:
            if np.allclose(bu, f.lam_array, rtol=0, atol=1e-12):
                raise ValueError(f"slice lies inside flat {i}")
            continue
        q = (f.lam_array - bu) / au
        for idx, other in enumerate(pts):
            if np.array_equal(other, q):
                # several flats through the same slice point add their weights
                wts[idx] += w0
                break
        else:
            pts.append(q)
            wts.append(w0)
    fams = []
    for j, g in enumerate(a.families):
        au = int(np.dot(alpha, g.u))
        bu = base @ np.asarray(g.u, dtype=float)
        if au == 0:
            if g.index_of(tuple(float(c) for c in bu), 1e-12) is not None:
                raise ValueError(f"slice lies inside a member of family {j}")
            continue
        sign = 1.0 if au > 0 else -1.0
        fams.append(PointFamily(
            tuple((np.array([float(c) for c in g.base]) - bu) / au),
            tuple(sign * float(c) for c in g.direction),
            float(g.scale) / abs(au), float(g.power), w0))
    ah = alpha / na
    c = float(ah @ a.taub_nut_matrix @ ah)
    return SlicePotential(np.array(pts).reshape(-1, 3), np.array(wts), c, tuple(fams))


def slice_point(base, alpha, q) -> np.ndarray:
    """The target point base + q (x) alpha."""
    alpha = np.asarray(alpha, dtype=float)
    return np.asarray(base, dtype=float) + np.outer(np.asarray(q, dtype=float), alpha)


def v_alpha_direct(a: Arrangement, b, alpha, K: int | None = None) -> float:
    """c + 1/2 sum_k |alpha^(u^_k)| / r_k(b), summed flat by flat (families truncated at K)."""
    alpha = np.asarray(alpha, dtype=float)
    ah = alpha / np.linalg.norm(alpha)
    total = 0.0
    flats = list(a.flats)
    if K:
        flats += [g.flat(k) for g in a.families for k in range(1, K + 1)]
    for f in flats:
        w = abs(float(ah @ f.u_hat))
        if w:
            total += w / r_k(b, f)
    return float(ah @ a.taub_nut_matrix @ ah) + 0.5 * total


# ---------------------------------------------------------------------------
# metric matrix


@dataclass
class MetricSample:
    point: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    tail_bound: float = 0.0


def _flat_arrays(a: Arrangement) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not a.flats:
        n = a.dimension
        return np.zeros((0, n)), np.zeros((0, 3)), np.zeros(0)
    U = np.array([f.u_hat for f in a.flats])
    L = np.array([f.lam_hat for f in a.flats])
    A = np.array([float(f.a) for f in a.flats])
    return U, L, A


def _family_metric_terms(g: FamilyGenerator, B: np.ndarray, tol: float) -> int:
    # r_k >= (s k^p - |base|)/|u| - |b(u^)|, so a/r_k <= a|u| / (s k^p - |base| - |u||b(u^)|)
    if float(g.power) <= 1.0:
        raise ValueError("divergent family (power <= 1)")

    off = _family_offset(g, B)
    bound = lambda N: monomial_tail_bound(N, float(g.a) * g.norm_u, float(g.scale), float(g.power), off)
    return smallest_index(lambda N: bound(N) < tol)


def _family_offset(g: FamilyGenerator, B: np.ndarray) -> float:
    uh = np.asarray(g.u, dtype=float) / g.norm_u
    return g.base_norm + g.norm_u * float(np.max(np.linalg.norm(B @ uh, axis=-1)))


def metric_values(a: Arrangement, B: np.ndarray, tol: float = DEFAULT_TOL,
                  terms: Sequence[int] | None = None) -> tuple[np.ndarray, float]:
    """V_ij at a stack of target points B with shape (m, 3, n); returns (V stack, tail bound)."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 2:
        B = B[None]
    n = a.dimension
    U, L, A = _flat_arrays(a)
    V = np.broadcast_to(a.taub_nut_matrix, (len(B), n, n)).copy()
    if len(U):
        R = np.linalg.norm(np.einsum("mcn,kn->mkc", B, U) - L[None], axis=2)
        if np.any(R == 0.0):
            raise ValueError("metric evaluated on a flat")
        V += np.einsum("mk,ki,kj->mij", A[None, :] / R, U, U)
    tail = 0.0
    share = tol / max(1, len(a.families))
    if terms is None:
        terms = [_family_metric_terms(g, B, share) for g in a.families]
    for g, N in zip(a.families, terms):
        if N > MAX_TERMS:
            raise ValueError(f"family needs {N} terms for the requested tolerance")
        uh = np.asarray(g.u, dtype=float) / g.norm_u
        bu = B @ uh                                        # (m, 3)
        acc = np.zeros(len(B))
        step = max(1, CHUNK // max(1, len(B)))
        for start in range(1, N + 1, step):
            lv = g.levels(start, min(N + 1, start + step)) / g.norm_u
            acc += (1.0 / np.linalg.norm(bu[:, None, :] - lv[None], axis=2)).sum(axis=1)
        V += float(g.a) * acc[:, None, None] * np.outer(uh, uh)[None]
        tail += monomial_tail_bound(N, float(g.a) * g.norm_u, float(g.scale), float(g.power),
                                    _family_offset(g, B))
    return V, tail


def metric_matrix(a: Arrangement, b, tol: float = DEFAULT_TOL) -> MetricSample:
    b = np.asarray(b, dtype=float)
    if b.shape != (3, a.dimension):
        raise ValueError(f"target point must have shape (3, {a.dimension})")
    V, tail = metric_values(a, b[None], tol)
    V = V[0]
    return MetricSample(b, V, np.linalg.inv(V), tail)


# ---------------------------------------------------------------------------
# the polyharmonic function F


def _phi(y: np.ndarray, e: np.ndarray) -> np.ndarray:
    """s log(s + r) - r for rows y, with s = <e, y>, r = |y|."""
    s = y @ e
    r = np.linalg.norm(y, axis=-1)
    rho2 = np.sum((y - s[..., None] * e) ** 2, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        spr = np.where(s >= 0, s + r, rho2 / (r - s))
    if np.any(spr <= 1e-12 * (1.0 + r)):
        raise ValueError("F evaluated on the branch half-line s + r = 0 of a flat")
    return s * np.log(spr) - r


def _phi_grad(y: np.ndarray, e: np.ndarray) -> np.ndarray:
    s = y @ e
    r = np.linalg.norm(y, axis=-1)
    return e[None, :] * np.log(s + r)[:, None] + (s[:, None] * e[None, :] - y) / (s + r)[:, None]


def F_eval(a: Arrangement, x, z, e=(1.0, 0.0, 0.0), tol: float = DEFAULT_TOL,
           terms: Sequence[int] | None = None) -> float:
    """F at the target point with e-coordinates ``x`` and complex coordinates ``z``.

    Infinite families are renormalized member by member: each member's term has its
    value and first-order Taylor part at b = 0 subtracted, which leaves the x-Hessian
    unchanged.  Members whose levels run along +e are evaluated with e -> -e, which
    changes the member's term by s log rho^2 and so again leaves the x-Hessian intact.
    """
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError("e must be a unit imaginary quaternion")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=complex)
    n = a.dimension
    if x.shape != (n,) or z.shape != (n,):
        raise ValueError(f"x and z must have length {n}")
    b = join_target(x, z, e)
    total = 0.0
    U, L, A = _flat_arrays(a)
    if len(U):
        Y = (b @ U.T).T - L
        total += float(np.sum(A * _phi(Y, e)))
    for idx, g in enumerate(a.families):
        N = None if terms is None else terms[idx]
        total += _family_F(g, b, e, tol / max(1, len(a.families)), N)
    c = a.taub_nut_matrix / 8.0
    quad = 4.0 * np.outer(x, x) - 2.0 * np.real(np.outer(z, np.conj(z)))
    return total + float(np.sum(c * quad))


def _family_F(g: FamilyGenerator, b: np.ndarray, e: np.ndarray, tol: float,
              N: int | None = None) -> float:
    d = np.array([float(c) for c in g.direction])
    cos = float(e @ d)
    if cos == 0.0:
        raise ValueError("family levels orthogonal to e: renormalized F is not available")
    ef = e if cos < 0 else -e
    uh = np.asarray(g.u, dtype=float) / g.norm_u
    delta = b @ uh
    dn = float(np.linalg.norm(delta))
    # along the segment from b = 0, s >= 0 and |Hessian| <= 8/r, so each
    # remainder is at most 4 a |delta|^2 / r
    s_eff, p = float(g.scale) * abs(cos), float(g.power)
    off = g.base_norm + g.norm_u * dn
    bound = lambda N: monomial_tail_bound(N, 4.0 * float(g.a) * dn * dn * g.norm_u, s_eff, p, off)
    if N is None:
        N = 1 if dn == 0.0 else smallest_index(lambda N: bound(N) < tol)
    N = max(N, smallest_index(lambda N: s_eff * N ** p > off))
    if N > MAX_TERMS:
        raise ValueError(f"family needs {N} terms for the requested tolerance")
    total = 0.0
    # far members: quadratic Taylor term, off by at most (16/3)|delta|^3/r0^2 each
    # (third derivatives are bounded by 8/r^2 where s >= 0)
    r_taylor = 64.0 * (1.0 + dn)
    # members are ordered by growing |level|, so the far ones form a tail k >= M
    M = smallest_index(lambda k: g.level_norm_lower_bound(k) / g.norm_u >= r_taylor)
    M = min(M, N + 1)
    if M <= N:
        H = _family_hessian_sum(g, tuple(ef), M, N)
        total += 0.5 * float(delta @ H @ delta)
    for start in range(1, M, CHUNK):
        Y0 = -g.levels(start, min(M, start + CHUNK)) / g.norm_u
        total += float(np.sum(_phi_remainder(Y0, delta, ef)))
    return float(g.a) * total


@functools.lru_cache(maxsize=64)
def _family_hessian_sum(g: FamilyGenerator, ef: tuple, M: int, N: int) -> np.ndarray:
    """sum_{k=M..N} of the Hessian of phi at y = -lambda^_k."""
    ef = np.asarray(ef)
    H = np.zeros((3, 3))
    for start in range(M, N + 1, CHUNK):
        Y0 = -g.levels(start, min(N + 1, start + CHUNK)) / g.norm_u
        H += _phi_hessian(Y0, ef).sum(axis=0)
    return H


def _phi_hessian(y: np.ndarray, e: np.ndarray) -> np.ndarray:
    s = y @ e
    r = np.linalg.norm(y, axis=-1)
    spr = (s + r)[:, None, None]
    w = e[None, :] + y / r[:, None]
    E = np.broadcast_to(e, y.shape)
    return ((np.einsum("ki,kj->kij", E, w) + np.outer(e, e)[None] - np.eye(3)[None]) / spr
            - np.einsum("ki,kj->kij", s[:, None] * e[None, :] - y, w) / spr**2)


def _phi_remainder(y0: np.ndarray, delta: np.ndarray, e: np.ndarray) -> np.ndarray:
    """phi(y0 + delta) - phi(y0) - grad phi(y0) . delta, without cancelling large terms."""
    s0 = y0 @ e
    r0 = np.linalg.norm(y0, axis=1)
    y = y0 + delta[None, :]
    r = np.linalg.norm(y, axis=1)
    ds = float(e @ delta)
    dr = (2.0 * (y0 @ delta) + delta @ delta) / (r + r0)
    spr0 = s0 + r0
    eps = (ds + dr) / spr0
    if np.any(1.0 + eps <= 1e-12):
        raise ValueError("F evaluated on the branch half-line s + r = 0 of a flat")
    return (s0 + ds) * np.log1p(eps) - dr - (s0 * ds - y0 @ delta) / spr0


def fd_hessian_x(a: Arrangement, x, z, e=(1.0, 0.0, 0.0), h: float = 1e-4,
                 tol: float = DEFAULT_TOL) -> np.ndarray:
    """Central finite-difference Hessian of F in the x coordinates.

    Families are truncated at one common index for every stencil point, chosen so
    that the Hessian of the discarded members is below ``tol``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    B = np.stack([join_target(x + d, z, e) for d in (2 * h) * np.vstack([np.eye(n), -np.eye(n)])])
    share = tol / max(1, len(a.families))
    terms = [_family_metric_terms(g, B, share) for g in a.families]
    f = lambda xx: F_eval(a, xx, z, e, tol, terms)
    H = np.zeros((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * h * h)
    return H


# ---------------------------------------------------------------------------
# finite-difference Laplacians


STENCIL = np.vstack([np.zeros(3), np.eye(3), -np.eye(3)])


def _laplacian(values: np.ndarray, h: float) -> float:
    return float((values[1:].sum() - 6.0 * values[0]) / (h * h))


@dataclass
class ResidualSample:
    residual: float
    bound: float
    roundoff: float

    @property
    def within_bound(self) -> bool:
        return abs(self.residual) <= self.bound + self.roundoff


def newton_fd_bound(weights, distances, h: float) -> float:
    """Truncation bound for the 7-point Laplacian of 1/2 sum w/|p - q|.

    Each axis contributes h^2/12 times a fourth derivative of 1/rho, bounded by 24/rho^5.
    """
    w = np.asarray(weights, dtype=float)
    d = np.asarray(distances, dtype=float) - h
    if np.any(d <= 0):
        return math.inf
    return float(np.sum(3.0 * w / d**5) * h * h)


def harmonic_residual(s: SlicePotential, p, h: float = DEFAULT_STEP,
                      tol: float = DEFAULT_TOL) -> float:
    return harmonic_check(s, p, h, tol).residual


def harmonic_check(s: SlicePotential, p, h: float = DEFAULT_STEP,
                   tol: float = DEFAULT_TOL) -> ResidualSample:
    p = np.asarray(p, dtype=float)
    P = p[None, :] + h * STENCIL
    if len(s.points):
        d = np.linalg.norm(s.points - p, axis=1)
        if np.any(d <= h):
            raise ValueError("finite-difference stencil reaches a singular point")
    else:
        d = np.zeros(0)
    terms = s.terms_for(P, tol)
    vals, _ = potential_values(s, P, tol, terms)
    bound = newton_fd_bound(s.weights, d, h) if len(d) else 0.0
    for fam, N in zip(s.families, terms):
        bound += _family_fd_bound(fam, p, N, h)
    roundoff = 64.0 * np.finfo(float).eps * float(np.max(np.abs(vals))) / (h * h)
    return ResidualSample(_laplacian(vals, h), bound, roundoff)


def _family_fd_bound(fam: PointFamily, p: np.ndarray, N: int, h: float) -> float:
    """FD truncation bound summed over the N family members that were evaluated."""
    total = 0.0
    for start in range(1, N + 1, CHUNK):
        d = np.linalg.norm(fam.points(start, min(N + 1, start + CHUNK)) - p, axis=1)
        total += newton_fd_bound(np.full(len(d), fam.weight), d, h)
    return total


def polyharmonic_residual(a: Arrangement, base, alpha, i: int, j: int, p,
                          h: float = DEFAULT_STEP, tol: float = DEFAULT_TOL) -> float:
    return polyharmonic_check(a, base, alpha, i, j, p, h, tol).residual


def polyharmonic_check(a: Arrangement, base, alpha, i: int, j: int, p,
                       h: float = DEFAULT_STEP, tol: float = DEFAULT_TOL) -> ResidualSample:
    """7-point Laplacian of V_ij on the slice q -> base + q (x) alpha, at q = p."""
    n = a.dimension
    base = np.asarray(base, dtype=float).reshape(3, n)
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(p, dtype=float)
    B = np.stack([slice_point(base, alpha, q) for q in p[None, :] + h * STENCIL])
    # every flat term is a Newtonian kernel in q: a u_i u_j / (|alpha(u^)| |q - q_k|)
    U, L, A = _flat_arrays(a)
    weights, dists = [], []
    for k in range(len(U)):
        au = float(alpha @ U[k])
        if au == 0.0:
            continue
        qk = (L[k] - base @ U[k]) / au
        d = float(np.linalg.norm(p - qk))
        if d <= h:
            raise ValueError("finite-difference stencil reaches a flat")
        weights.append(2.0 * abs(A[k] * U[k, i] * U[k, j]) / abs(au))
        dists.append(d)
    share = tol / max(1, len(a.families))
    terms = [_family_metric_terms(g, B, share) for g in a.families]
    V, _ = metric_values(a, B, tol, terms)
    vals = V[:, i, j]
    bound = newton_fd_bound(weights, dists, h) if weights else 0.0
    for g, N in zip(a.families, terms):
        au = float(alpha @ np.asarray(g.u, dtype=float))
        if au == 0.0:
            continue
        uh = np.asarray(g.u, dtype=float) / g.norm_u
        fam = PointFamily(tuple((np.array([float(c) for c in g.base]) - base @ np.asarray(g.u, float)) / au),
                          tuple(np.sign(au) * float(c) for c in g.direction),
                          float(g.scale) / abs(au), float(g.power),
                          2.0 * float(g.a) * abs(uh[i] * uh[j]) * g.norm_u / abs(au))
        if fam.weight == 0.0:
            continue
        bound += _family_fd_bound(fam, p, N, h)
    roundoff = 64.0 * np.finfo(float).eps * float(np.max(np.abs(vals))) / (h * h)
    return ResidualSample(_laplacian(vals, h), bound, roundoff)


def ratio_test(check, h: float = 1e-2) -> tuple[bool, float]:
    """Compare residuals at h and h/2: an O(h^2) error gives a ratio near 4.

    Entries whose residuals sit at the roundoff floor at both steps are exactly
    harmonic to working precision and pass.
    """
    r1, r2 = check(h), check(h / 2)
    if abs(r1.residual) <= r1.roundoff and abs(r2.residual) <= r2.roundoff:
        return True, math.nan
    if r2.residual == 0.0:
        return False, math.inf
    ratio = r1.residual / r2.residual
    return 3.0 <= ratio <= 5.0, ratio
