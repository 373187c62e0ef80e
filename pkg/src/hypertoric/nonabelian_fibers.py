"""Fibres of the hyperKaehler moment map of SU(n) acting on T*C^n, n = 2, 3.

mu(z, w) = ((i/2)(z z^+ - w^+ w)_0, (z w)_0) with z a column and w a row.

Classification does not depend on coordinates.  If (z w)_0 = beta then
beta - nu I = z w has rank at most one, where nu = -(w z)/n is an eigenvalue of
beta of multiplicity n-1, so nu^2 = tr(beta^2)/(n(n-1)).  Writing
beta - nu I = a b^T, every solution is z = t a, w = b^T/t, and the real
equation becomes

    m (a a^+)_0 - (conj(b) b^T)_0 / m = -2i alpha,    m = |t|^2 > 0,

which is a real quadratic in m entry by entry.  Each admissible m is a circle
(the phase of t).  When beta = 0 one of z, w vanishes and the other is read off
from the spectrum of -2i alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

WITNESS_TOL = 1e-9
ZERO_REL = 1e-10
RANK_REL = 1e-10
DOUBLE_ROOT = 1e-12
BOUNDARY_BAND = 1e-7
PHASES = 16


@dataclass(frozen=True)
class CotangentPoint:
    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex).reshape(-1)
        w = np.asarray(self.w, dtype=complex).reshape(-1)
        if z.shape != w.shape:
            raise ValueError("z and w must have the same length")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite cotangent point")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return len(self.z)

    def act(self, A: np.ndarray) -> "CotangentPoint":
        """(z, w) -> (A z, w A^{-1})."""
        return CotangentPoint(A @ self.z, self.w @ np.linalg.inv(A))

    def rotate(self, theta: float) -> "CotangentPoint":
        """The residual circle: (e^{i theta} z, e^{-i theta} w)."""
        g = np.exp(1j * theta)
        return CotangentPoint(g * self.z, self.w / g)


@dataclass(frozen=True)
class MomentTarget:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=complex)
        b = np.asarray(self.beta, dtype=complex)
        n = a.shape[0]
        if a.shape != (n, n) or b.shape != (n, n):
            raise ValueError("alpha and beta must be square of the same size")
        scale = 1.0 + max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        if np.abs(a + a.conj().T).max() > 1e-12 * scale:
            raise ValueError("alpha must be anti-Hermitian")
        if abs(np.trace(a)) > 1e-12 * scale or abs(np.trace(b)) > 1e-12 * scale:
            raise ValueError("alpha and beta must be trace-free")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def norm(self) -> float:
        return float(math.hypot(np.linalg.norm(self.alpha), np.linalg.norm(self.beta)))

    def conjugate(self, A: np.ndarray) -> "MomentTarget":
        """Target of the moved point: (A alpha A^+, A beta A^{-1}) for unitary A."""
        return MomentTarget(A @ self.alpha @ A.conj().T, A @ self.beta @ np.linalg.inv(A))

    @classmethod
    def zero(cls, n: int) -> "MomentTarget":
        return cls(np.zeros((n, n)), np.zeros((n, n)))


def trace_free(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    return M - np.trace(M) / n * np.eye(n)


def mu(p: CotangentPoint) -> MomentTarget:
    z = p.z[:, None]
    w = p.w[None, :]
    alpha = 0.5j * trace_free(z @ z.conj().T - w.conj().T @ w)
    beta = trace_free(z @ w)
    # remove rounding so the target passes its own invariants exactly
    alpha = 0.5 * (alpha - alpha.conj().T)
    return MomentTarget(alpha, beta)


def distance(p: CotangentPoint, t: MomentTarget) -> float:
    m = mu(p)
    return float(math.hypot(np.linalg.norm(m.alpha - t.alpha), np.linalg.norm(m.beta - t.beta)))


# ---------------------------------------------------------------------------
# canonical upper-triangular form


def _lex_key(x: complex) -> tuple[float, float]:
    return (x.real, x.imag)


def triangularize(t: MomentTarget) -> tuple[np.ndarray, MomentTarget]:
    """Special unitary U with U beta U^+ upper triangular.

    Eigenvalues appear in lexicographic (real, imaginary) order.  Each row of U
    has its first non-zero entry made real positive, then U is rescaled to det 1.
    Witnesses pull back by (z, w) -> (U^+ z, w U).
    """
    n = t.n
    beta = t.beta
    scale = max(1.0, float(np.abs(beta).max(initial=0.0)))
    diag = np.diag(beta)
    if (np.abs(np.tril(beta, -1)).max(initial=0.0) <= 1e-14 * scale
            and all(_lex_key(diag[i]) <= _lex_key(diag[i + 1]) for i in range(n - 1))):
        U = np.eye(n, dtype=complex)
        return U, MomentTarget(t.alpha.copy(), np.triu(beta))
    T, Z = scipy.linalg.schur(beta, output="complex")
    # bubble sort the diagonal with adjacent swaps
    for i in range(n):
        for j in range(n - 1 - i):
            if _lex_key(T[j, j]) > _lex_key(T[j + 1, j + 1]):
                T, Z, info = lapack.ztrexc(T, Z, j + 1, j + 2)
                if info != 0:
                    raise RuntimeError(f"eigenvalue reordering failed (info={info})")
    U = Z.conj().T
    for r in range(n):
        k = int(np.argmax(np.abs(U[r]) > 1e-14))
        U[r] *= np.conj(U[r, k]) / abs(U[r, k])
    U *= np.linalg.det(U) ** (-1.0 / n)
    beta_t = np.triu(U @ beta @ U.conj().T)
    alpha_t = U @ t.alpha @ U.conj().T
    alpha_t = 0.5 * (alpha_t - alpha_t.conj().T)
    return U, MomentTarget(alpha_t - np.trace(alpha_t) / n * np.eye(n), beta_t - np.trace(beta_t) / n * np.eye(n))


# ---------------------------------------------------------------------------
# exact classification


@dataclass
class FiberClass:
    kind: str                      # "empty", "point" or "circles"
    count: int
    witnesses: list[CotangentPoint] = field(default_factory=list)
    moduli: list[float] = field(default_factory=list)
    branch: list[str] = field(default_factory=list)
    boundary: list[str] = field(default_factory=list)
    case: str | None = None

    @property
    def label(self) -> str:
        if self.kind == "circles":
            return f"Circles({self.count})"
        return self.kind.capitalize()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "count": self.count, "label": self.label, "case": self.case,
            "moduli": self.moduli, "branch": self.branch, "boundary": self.boundary,
            "witnesses": [{"z": [[c.real, c.imag] for c in p.z], "w": [[c.real, c.imag] for c in p.w]}
                          for p in self.witnesses],
        }


def _fiber(witnesses: list[CotangentPoint], moduli: list[float], branch: list[str]) -> FiberClass:
    if not witnesses:
        return FiberClass("empty", 0, [], [], branch)
    if len(witnesses) == 1 and np.allclose(witnesses[0].z, 0) and np.allclose(witnesses[0].w, 0):
        return FiberClass("point", 1, witnesses, [0.0], branch)
    return FiberClass("circles", len(witnesses), witnesses, moduli, branch)


def _nu_candidates(beta: np.ndarray, tol: float) -> list[complex]:
    n = beta.shape[0]
    nu0 = np.sqrt(complex(np.trace(beta @ beta)) / (n * (n - 1)))
    small = 1e-6 * max(1.0, np.linalg.norm(beta))
    if abs(nu0) <= small and _rank_defect(beta, 0.0) <= RANK_REL:
        # nilpotent rank one: nu = 0 exactly; nearby estimates are roundoff
        return [0j]
    cands = [nu0, -nu0]
    if abs(nu0) <= small:
        cands.append(0.0)
    # keep whichever of the raw and polished value is closer to rank one; the raw 0 matters
    # for nilpotent beta, whose eigenvalues roundoff spreads by sqrt(eps)
    scored = []
    for c in cands:
        for d in {complex(c), _refine_nu(beta, complex(c))}:
            scored.append((_rank_defect(beta, d), d))
    out = []
    for _, c in sorted(scored, key=lambda x: x[0]):
        if not any(abs(c - d) <= tol for d in out):
            out.append(c)
    return out


def _rank_defect(beta: np.ndarray, nu: complex) -> float:
    s = np.linalg.svd(beta - nu * np.eye(beta.shape[0]), compute_uv=False)
    return float(s[1] / s[0]) if s[0] > 0 else 0.0


def _refine_nu(beta: np.ndarray, nu: complex, steps: int = 3) -> complex:
    """Polish nu so that beta - nu I is as close to rank one as possible."""
    n = beta.shape[0]
    for _ in range(steps):
        u, s, vh = np.linalg.svd(beta - nu * np.eye(n))
        P = s[0] * np.outer(u[:, 0], vh[0])
        nu = -np.trace(P) / n
    return complex(nu)


def _rank_one_factor(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r, c = np.unravel_index(np.argmax(np.abs(P)), P.shape)
    return P[:, c].copy(), P[r, :] / P[r, c]


def _positive_roots(c2: float, c1: float, c0: float, scale: float) -> list[float]:
    """Positive roots of c2 m^2 + c1 m + c0 = 0; a near-double root is returned once."""
    if abs(c2) <= 1e-14 * scale:
        if abs(c1) <= 1e-14 * scale:
            return []
        m = -c0 / c1
        return [m] if m > 0 else []
    disc = c1 * c1 - 4 * c2 * c0
    ref = c1 * c1 + abs(4 * c2 * c0)
    if disc < -DOUBLE_ROOT * ref:
        return []
    if abs(disc) <= DOUBLE_ROOT * ref:
        m = -c1 / (2 * c2)
        return [m] if m > 0 else []
    sq = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(sq, c1))
    roots = [q / c2, c0 / q] if q != 0 else [0.0]
    return sorted(m for m in roots if m > 0)


def _solve_modulus(A: np.ndarray, B: np.ndarray, C: np.ndarray, tol: float) -> list[float]:
    """All m > 0 with m A - B/m = C (Hermitian matrices, A != 0)."""
    scale = max(np.abs(A).max(), np.abs(B).max(), np.abs(C).max(), 1e-300)
    # multiply by m: A m^2 - C m - B = 0; use the component with the largest leading coefficient
    comps = [(M.real, M.imag) for M in (A, C, B)]
    best = None
    for part in range(2):
        lead = comps[0][part]
        idx = np.unravel_index(np.argmax(np.abs(lead)), lead.shape)
        if best is None or abs(lead[idx]) > abs(best[0]):
            best = (lead[idx], -comps[1][part][idx], -comps[2][part][idx])
    roots = _positive_roots(*best, scale)
    good = []
    for m in roots:
        res = np.abs(m * A - B / m - C).max()
        if res <= tol * max(1.0, m * np.abs(A).max() + np.abs(B).max() / m + np.abs(C).max()):
            good.append(m)
    return good


def _classify_zero_beta(C: np.ndarray, n: int, tol: float) -> tuple[list, list, list]:
    """beta = 0: either z = 0 or w = 0, and (z z^+)_0 or (w^+ w)_0 equals +-C."""
    scale = max(1.0, np.abs(C).max())
    if np.abs(C).max() <= tol * scale:
        return [CotangentPoint(np.zeros(n), np.zeros(n))], [0.0], ["beta=0, alpha=0"]
    wits, mods, branch = [], [], []
    for sign, name in ((1.0, "z"), (-1.0, "w")):
        vals, vecs = np.linalg.eigh(sign * C)
        top, rest = vals[-1], vals[:-1]
        if np.ptp(rest) <= tol * scale and top - rest[0] > tol * scale:
            v = vecs[:, -1] * math.sqrt(top - rest[0])
            if name == "z":
                p = CotangentPoint(v, np.zeros(n))
            else:
                # (w^+ w) = conj(w)^T w has eigenvector conj(w)
                p = CotangentPoint(np.zeros(n), np.conj(v))
            wits.append(p)
            mods.append(float(top - rest[0]))
            branch.append(f"beta=0, {name}-branch")
    return wits, mods, branch


def _classify(t: MomentTarget, tol: float = 1e-9) -> FiberClass:
    n = t.n
    beta, alpha = t.beta, t.alpha
    C = -2j * alpha
    C = 0.5 * (C + C.conj().T)
    bscale = np.linalg.norm(beta)
    tscale = max(1.0, t.norm)
    if bscale <= ZERO_REL * tscale:
        wits, mods, branch = _classify_zero_beta(C, n, tol)
        return _fiber(wits, mods, branch)
    wits, mods, branch = [], [], []
    for nu in _nu_candidates(beta, 1e-9 * bscale):
        P = beta - nu * np.eye(n)
        s = np.linalg.svd(P, compute_uv=False)
        if s[1] > RANK_REL * max(s[0], bscale):
            continue
        a, b = _rank_one_factor(P)
        A = trace_free(np.outer(a, a.conj()))
        B = trace_free(np.outer(b.conj(), b))
        for m in _solve_modulus(A, B, C, tol):
            r = math.sqrt(m)
            p = CotangentPoint(r * a, b / r)
            if any(_same_orbit(p, q) for q in wits):
                continue
            wits.append(p)
            mods.append(float(np.linalg.norm(p.z) ** 2))
            branch.append(f"nu={nu.real:.6g}{nu.imag:+.6g}j")
    return _fiber(wits, mods, branch)


def _same_orbit(p: CotangentPoint, q: CotangentPoint) -> bool:
    """Same circle orbit: equal z z^+, w^+ w and z w."""
    tol = 1e-8 * (1.0 + np.linalg.norm(p.z) ** 2 + np.linalg.norm(p.w) ** 2)
    return (np.abs(np.outer(p.z, p.z.conj()) - np.outer(q.z, q.z.conj())).max() <= tol
            and np.abs(np.outer(p.w.conj(), p.w) - np.outer(q.w.conj(), q.w)).max() <= tol
            and np.abs(np.outer(p.z, p.w) - np.outer(q.z, q.w)).max() <= tol)


def _check_witnesses(fc: FiberClass, t: MomentTarget):
    for p in fc.witnesses:
        for theta in np.linspace(0.0, 2 * math.pi, PHASES, endpoint=False):
            if distance(p.rotate(theta), t) > WITNESS_TOL * max(1.0, t.norm):
                raise AssertionError("fibre witness failed verification")


def _near_zero_flags(names_values: list[tuple[str, complex]], scale: float) -> list[str]:
    flags = []
    for name, v in names_values:
        r = abs(v) / scale
        if ZERO_REL < r < BOUNDARY_BAND:
            flags.append(f"{name} close to zero ({r:.2e} relative)")
    return flags


def classify_su2(t: MomentTarget) -> FiberClass:
    if t.n != 2:
        raise ValueError("classify_su2 needs a 2x2 target")
    fc = _classify(t)
    _check_witnesses(fc, t)
    U, tt = triangularize(t)
    scale = max(1.0, t.norm)
    lam, m12 = tt.beta[0, 0], tt.beta[0, 1]
    z_lam = abs(lam) <= ZERO_REL * scale
    z_mu = abs(m12) <= ZERO_REL * scale
    fc.case = {(False, False): "1", (True, False): "2", (False, True): "3", (True, True): "4"}[(z_lam, z_mu)]
    fc.boundary = _near_zero_flags([("lambda", lam), ("mu", m12)], scale)
    return fc


def classify_su3(t: MomentTarget) -> FiberClass:
    if t.n != 3:
        raise ValueError("classify_su3 needs a 3x3 target")
    fc = _classify(t)
    _check_witnesses(fc, t)
    U, tt = triangularize(t)
    scale = max(1.0, t.norm)
    xi1, xi2, zeta = tt.beta[0, 1], tt.beta[1, 2], tt.beta[0, 2]
    nz = lambda v: abs(v) > ZERO_REL * scale
    fc.boundary = _near_zero_flags([("xi1", xi1), ("xi2", xi2), ("zeta", zeta)], scale)
    if nz(xi1) and nz(xi2):
        fc.case = "1"
    elif nz(xi1) or nz(xi2):
        fc.case = "2" if nz(xi1) else "2'"
        if fc.witnesses:
            p = fc.witnesses[0].act(U)
            big = lambda v: abs(v) > 1e-8 * max(1.0, np.abs(p.z).max(), np.abs(p.w).max())
            if fc.case == "2":
                fc.case += "a" if big(p.z[1]) else ("b" if big(p.w[0]) else "c")
            else:
                fc.case += "a" if big(p.w[1]) else ("b" if big(p.z[2]) else "c")
    elif nz(zeta):
        fc.case = "other"
    else:
        fc.case = "3"
        if fc.witnesses:
            p = fc.witnesses[0].act(U)
            tol = 1e-8 * max(1.0, np.abs(p.z).max(), np.abs(p.w).max())
            kz = int(np.sum(np.abs(p.z) > tol))
            kw = int(np.sum(np.abs(p.w) > tol))
            if kz + kw == 0 or (kz + kw == 1):
                fc.case += "c"
            elif kz and kw:
                fc.case += "b"
            else:
                fc.case += "a"
    return fc


def classify(t: MomentTarget) -> FiberClass:
    if t.n == 2:
        return classify_su2(t)
    if t.n == 3:
        return classify_su3(t)
    raise ValueError("only SU(2) and SU(3) are supported")


def in_image(t: MomentTarget) -> bool:
    return classify(t).kind != "empty"


# ---------------------------------------------------------------------------
# brute-force oracle


def oracle_classify(t: MomentTarget, grid: int = 4001, m_range: tuple[float, float] = (1e-6, 1e6),
                    tol: float = 1e-8) -> FiberClass:
    """Independent check: scan the modulus on a log grid and polish the minima.

    Rank-one structure of beta - nu I is read from an SVD for each eigenvalue nu of
    beta.  Along x(m) = (sqrt(m) a, b/sqrt(m)) the moment map is
    (m A0 - B0/m, (a b^T)_0), so |mu(x(m)) - t|^2 is scanned over the grid and its
    minima are polished by bisection on the sign of the derivative.
    """
    n = t.n
    scale = max(1.0, t.norm)
    ms = np.geomspace(*m_range, grid)
    found: list[CotangentPoint] = []

    def accept(p: CotangentPoint):
        if distance(p, t) <= tol * scale and not any(_same_orbit(p, q) for q in found):
            found.append(p)

    paths = []                      # (A0, B0, beta offset, maker)
    if np.linalg.norm(t.beta) <= ZERO_REL * scale:
        accept(CotangentPoint(np.zeros(n), np.zeros(n)))
        C = -2j * t.alpha
        zero = np.zeros((n, n), dtype=complex)
        for sign in (1.0, -1.0):
            vals, vecs = np.linalg.eigh(0.5 * (C + C.conj().T) * sign)
            v = vecs[:, -1]
            if sign > 0:
                make = lambda m, v=v: CotangentPoint(math.sqrt(m) * v, np.zeros(n))
            else:
                make = lambda m, v=v: CotangentPoint(np.zeros(n), math.sqrt(m) * np.conj(v))
            A0 = sign * 0.5j * trace_free(np.outer(v, v.conj()))
            paths.append((A0, zero, 0.0, make))
    else:
        # eigenvalues of a defective beta are only good to about sqrt(eps) |beta|
        spread = 1e-6 * max(1.0, float(np.linalg.norm(t.beta)))
        nus: list[complex] = []
        for nu in [0.0] + list(np.linalg.eigvals(t.beta)):
            if all(abs(nu - d) > spread for d in nus):
                nus.append(nu)
        for nu in nus:
            u, s, vh = np.linalg.svd(t.beta - nu * np.eye(n))
            if s[1] > 1e-6 * s[0]:
                continue
            a = u[:, 0] * math.sqrt(s[0])
            b = vh[0] * math.sqrt(s[0])
            make = lambda m, a=a, b=b: CotangentPoint(math.sqrt(m) * a, b / math.sqrt(m))
            A0 = 0.5j * trace_free(np.outer(a, a.conj()))
            B0 = 0.5j * trace_free(np.outer(b.conj(), b))
            off = float(np.linalg.norm(trace_free(np.outer(a, b)) - t.beta) ** 2)
            paths.append((A0, B0, off, make))
    for A0, B0, off, make in paths:
        for m in _scan(A0, B0, t.alpha, off, ms):
            accept(make(m))
    mods = [float(np.linalg.norm(p.z) ** 2) for p in found]
    return _fiber(found, mods, ["oracle"])


def _scan(A0, B0, alpha, off, ms: np.ndarray) -> list[float]:
    """Local minima in m of |m A0 - B0/m - alpha|^2 + off, polished by bisection."""
    def f(m):
        m = np.asarray(m, dtype=float)[..., None, None]
        return np.sum(np.abs(m * A0 - B0 / m - alpha) ** 2, axis=(-2, -1)) + off

    def df(m):
        R = m * A0 - B0 / m - alpha
        return 2.0 * float(np.real(np.sum(np.conj(R) * (A0 + B0 / m**2))))

    vals = f(ms)
    out = []
    for i in np.nonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:]))[0] + 1:
        lo, hi = ms[i - 1], ms[i + 1]
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if df(mid) > 0:
                hi = mid
            else:
                lo = mid
            if hi / lo - 1 < 1e-15:
                break
        out.append(math.sqrt(lo * hi))
    return out
