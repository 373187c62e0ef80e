"""Arrangements of flats H(u, lambda) = {a : a(u) = lambda} in Im H (x) (R^n)^*.

Levels are kept exact (``Fraction``) whenever they were given as integers or
rationals; otherwise they are floats and comparisons use a residual tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterator, Sequence, Union

import numpy as np

from . import lattice

Number = Union[Fraction, float]

FLOAT_TOL = 1e-10
DEFAULT_TRUNCATION = 10_000


def as_number(x) -> Number:
    """Coerce to an exact ``Fraction`` (int, Fraction, "p/q" string) or a float."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("non-finite value")
        return x
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as a number")


def is_exact(x) -> bool:
    return isinstance(x, Fraction)


def _vec_norm(v: Sequence[Number]) -> float:
    return math.sqrt(sum(float(c) ** 2 for c in v))


def _canonical_sign(u: Sequence[int]) -> int:
    for c in u:
        if c != 0:
            return 1 if c > 0 else -1
    raise ValueError("zero weight")


@dataclass(frozen=True)
class Flat:
    """The flat H(u, lam); ``a`` is its coefficient in the polyharmonic function F."""

    u: tuple[int, ...]
    lam: tuple[Number, Number, Number]
    a: Number = Fraction(1, 2)

    def __post_init__(self):
        u = tuple(int(c) for c in self.u)
        if any(c != 0 and c != float(c) for c in self.u):
            raise ValueError(f"weight {self.u} is not integral")
        if not any(u):
            raise ValueError("weight u must be non-zero")
        lam = tuple(as_number(c) for c in self.lam)
        if len(lam) != 3:
            raise ValueError("level lambda must have three components")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "a", as_number(self.a))

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.lam)

    @property
    def norm_u(self) -> float:
        return math.sqrt(sum(c * c for c in self.u))

    @property
    def u_hat(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float) / self.norm_u

    @property
    def lam_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.lam])

    @property
    def lam_hat(self) -> np.ndarray:
        return self.lam_array / self.norm_u

    def canonical(self) -> tuple[tuple[int, ...], tuple[Number, ...]]:
        """(u, lam) with u's first non-zero entry positive; H(u,l) = H(-u,-l)."""
        s = _canonical_sign(self.u)
        return tuple(s * c for c in self.u), tuple(s * c for c in self.lam)

    def same_subspace(self, other: "Flat", tol: float = FLOAT_TOL) -> bool:
        ku, kl = self.canonical()
        ou, ol = other.canonical()
        if ku != ou:
            return False
        return _levels_equal(kl, ol, tol)


def _levels_equal(l1, l2, tol: float = FLOAT_TOL) -> bool:
    if all(is_exact(c) for c in l1) and all(is_exact(c) for c in l2):
        return tuple(l1) == tuple(l2)
    d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(l1, l2)))
    scale = 1.0 + max(_vec_norm(l1), _vec_norm(l2))
    return d <= tol * scale


@dataclass(frozen=True)
class FamilyGenerator:
    """Infinite family of parallel flats H(u, base + scale * k**power * direction), k >= 1."""

    u: tuple[int, ...]
    base: tuple[Number, Number, Number]
    direction: tuple[Number, Number, Number]
    scale: Number
    power: Number
    a: Number = Fraction(1, 2)

    def __post_init__(self):
        u = tuple(int(c) for c in self.u)
        if not any(u):
            raise ValueError("family weight must be non-zero")
        base = tuple(as_number(c) for c in self.base)
        direction = tuple(as_number(c) for c in self.direction)
        if len(base) != 3 or len(direction) != 3:
            raise ValueError("family base and direction need three components")
        if abs(sum(float(c) ** 2 for c in direction) - 1.0) > 1e-12:
            raise ValueError(f"family direction {direction} is not a unit vector")
        scale, power = as_number(self.scale), as_number(self.power)
        if not scale > 0:
            raise ValueError("family scale must be positive")
        if not power > 0:
            raise ValueError("family power must be positive")
        for name, val in (("u", u), ("base", base), ("direction", direction),
                          ("scale", scale), ("power", power), ("a", as_number(self.a))):
            object.__setattr__(self, name, val)

    @property
    def norm_u(self) -> float:
        return math.sqrt(sum(c * c for c in self.u))

    @property
    def exact(self) -> bool:
        return (all(is_exact(c) for c in self.base + self.direction) and is_exact(self.scale)
                and is_exact(self.power) and self.power.denominator == 1)

    def _kp(self, k: int):
        if self.exact:
            return Fraction(k) ** int(self.power)
        return float(k) ** float(self.power)

    def level(self, k: int) -> tuple[Number, Number, Number]:
        if k < 1:
            raise ValueError("family index starts at 1")
        t = self.scale * self._kp(k) if self.exact else float(self.scale) * self._kp(k)
        if self.exact:
            return tuple(b + t * d for b, d in zip(self.base, self.direction))
        return tuple(float(b) + t * float(d) for b, d in zip(self.base, self.direction))

    def flat(self, k: int) -> Flat:
        return Flat(self.u, self.level(k), self.a)

    def levels(self, start: int, stop: int) -> np.ndarray:
        """Float levels for k in [start, stop) as an array of shape (stop-start, 3)."""
        k = np.arange(start, stop, dtype=float)
        t = float(self.scale) * k ** float(self.power)
        return (np.array([float(c) for c in self.base])[None, :]
                + t[:, None] * np.array([float(c) for c in self.direction])[None, :])

    @property
    def base_norm(self) -> float:
        return _vec_norm(self.base)

    def level_norm_lower_bound(self, k: int) -> float:
        """|level(k)| >= scale * k**power - |base|."""
        return float(self.scale) * float(k) ** float(self.power) - self.base_norm

    def index_of(self, level: Sequence[Number], tol: float = FLOAT_TOL) -> int | None:
        """The k with level(k) == level, or None."""
        d = [as_number(c) - b for c, b in zip(level, self.base)]
        if self.exact and all(is_exact(c) for c in d):
            t = sum(c * e for c, e in zip(d, self.direction))
            if any(c != t * e for c, e in zip(d, self.direction)):
                return None
            t = t / self.scale
            if t <= 0:
                return None
            p = int(self.power)
            k = round(float(t) ** (1.0 / p))
            for cand in (k - 1, k, k + 1):
                if cand >= 1 and Fraction(cand) ** p == t:
                    return cand
            return None
        d = np.array([float(c) for c in d])
        e = np.array([float(c) for c in self.direction])
        t = float(d @ e)
        scale = 1.0 + _vec_norm(level)
        if np.linalg.norm(d - t * e) > tol * scale:
            return None
        t /= float(self.scale)
        if t <= 0:
            return None
        k = round(t ** (1.0 / float(self.power)))
        for cand in (k - 1, k, k + 1):
            if cand >= 1 and _levels_equal(self.level(cand), level, tol):
                return cand
        return None


@dataclass(frozen=True)
class Arrangement:
    dimension: int
    flats: tuple[Flat, ...] = ()
    families: tuple[FamilyGenerator, ...] = ()
    taub_nut: tuple[tuple[Number, ...], ...] | None = None

    def __post_init__(self):
        n = int(self.dimension)
        if n < 1:
            raise ValueError("dimension must be at least 1")
        flats = tuple(self.flats)
        families = tuple(self.families)
        for idx, f in enumerate(flats):
            if len(f.u) != n:
                raise ValueError(f"flat {idx}: weight {f.u} has wrong length for n={n}")
        for idx, g in enumerate(families):
            if len(g.u) != n:
                raise ValueError(f"family {idx}: weight {g.u} has wrong length for n={n}")
        for i, j in combinations(range(len(flats)), 2):
            if flats[i].same_subspace(flats[j]):
                raise ValueError(f"flats {i} and {j} coincide")
        for i, f in enumerate(flats):
            for j, g in enumerate(families):
                if _family_hits(g, f) is not None:
                    raise ValueError(f"flat {i} coincides with member {_family_hits(g, f)} of family {j}")
        for i, j in combinations(range(len(families)), 2):
            if _families_overlap(families[i], families[j]):
                raise ValueError(f"families {i} and {j} share a flat")
        if self.taub_nut is None:
            T = tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))
        else:
            T = tuple(tuple(as_number(c) for c in row) for row in self.taub_nut)
        if len(T) != n or any(len(row) != n for row in T):
            raise ValueError(f"taub_nut must be {n}x{n}")
        Tf = np.array([[float(c) for c in row] for row in T])
        if not np.allclose(Tf, Tf.T, rtol=0, atol=1e-12):
            raise ValueError("taub_nut must be symmetric")
        if np.linalg.eigvalsh(Tf).min() < -1e-12 * max(1.0, np.abs(Tf).max()):
            raise ValueError("taub_nut must be positive semidefinite")
        object.__setattr__(self, "dimension", n)
        object.__setattr__(self, "flats", flats)
        object.__setattr__(self, "families", families)
        object.__setattr__(self, "taub_nut", T)

    @property
    def taub_nut_matrix(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.taub_nut])

    @property
    def exact(self) -> bool:
        return all(f.exact for f in self.flats) and all(g.exact for g in self.families)

    def weights(self) -> list[tuple[int, ...]]:
        return [f.u for f in self.flats] + [g.u for g in self.families]

    def spans(self) -> bool:
        W = self.weights()
        return bool(W) and lattice.rank(W) == self.dimension

    def truncate(self, K: int) -> "Arrangement":
        """Materialize family members k = 1..K as explicit flats (families dropped)."""
        extra = [g.flat(k) for g in self.families for k in range(1, K + 1)]
        return Arrangement(self.dimension, self.flats + tuple(extra), (), self.taub_nut)

    def with_flat(self, f: Flat) -> "Arrangement":
        return Arrangement(self.dimension, self.flats + (f,), self.families, self.taub_nut)

    def iter_flats(self, K: int) -> Iterator[tuple[str, Flat]]:
        for i, f in enumerate(self.flats):
            yield f"flat[{i}]", f
        for j, g in enumerate(self.families):
            for k in range(1, K + 1):
                yield f"family[{j}][{k}]", g.flat(k)


def _family_hits(g: FamilyGenerator, f: Flat) -> int | None:
    if tuple(g.u) == f.u:
        return g.index_of(f.lam)
    if tuple(-c for c in g.u) == f.u:
        return g.index_of(tuple(-c for c in f.lam))
    return None


def _families_overlap(g: FamilyGenerator, h: FamilyGenerator, probe: int = 64) -> bool:
    if tuple(abs(c) for c in g.u) != tuple(abs(c) for c in h.u):
        return False
    return any(_family_hits(h, g.flat(k)) is not None for k in range(1, probe + 1))


# ---------------------------------------------------------------------------
# reports


@dataclass
class PrimitiveReport:
    ok: bool
    spans: bool
    rank: int
    non_primitive: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "spans": self.spans, "rank": self.rank,
                "non_primitive": self.non_primitive}


@dataclass
class ConditionReport:
    ok: bool
    violations: list[dict] = field(default_factory=list)
    truncation: int = 0
    certified: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations, "truncation": self.truncation,
                "certified": self.certified, "note": self.note}


def validate_primitive(a: Arrangement) -> PrimitiveReport:
    bad = []
    for i, f in enumerate(a.flats):
        g = lattice.gcd_all(f.u)
        if g != 1:
            bad.append({"flat": f"flat[{i}]", "u": list(f.u), "gcd": g})
    for j, fam in enumerate(a.families):
        g = lattice.gcd_all(fam.u)
        if g != 1:
            bad.append({"flat": f"family[{j}]", "u": list(fam.u), "gcd": g})
    r = lattice.rank(a.weights()) if a.weights() else 0
    spans = r == a.dimension
    return PrimitiveReport(ok=not bad and spans, spans=spans, rank=r, non_primitive=bad)


def intersection(flats: Sequence[Flat], tol: float | None = None):
    """Common point of the flats, or None when they do not meet.

    Returns a (3, n) array: an object array of ``Fraction`` on the exact path,
    otherwise floats.  Underdetermined systems return the least-norm point.
    """
    if not flats:
        raise ValueError("intersection needs at least one flat")
    n = len(flats[0].u)
    if any(len(f.u) != n for f in flats):
        raise ValueError("flats have different dimensions")
    kinds = {f.exact for f in flats}
    if kinds == {True} and tol is None:
        U = [list(f.u) for f in flats]
        out = np.empty((3, n), dtype=object)
        for c in range(3):
            sol = lattice.solve_rational(U, [f.lam[c] for f in flats])
            if sol is None:
                return None
            out[c, :] = sol
        return out
    if len(kinds) > 1 and tol is None:
        raise ValueError("mixed exact and floating levels: supply a tolerance")
    tol = FLOAT_TOL if tol is None else tol
    U = np.array([f.u for f in flats], dtype=float)
    L = np.array([f.lam_array for f in flats])          # m x 3
    sol, *_ = np.linalg.lstsq(U, L, rcond=None)          # n x 3
    resid = np.abs(U @ sol - L).max()
    if resid > tol * (1.0 + np.abs(L).max()):
        return None
    return sol.T


# ---------------------------------------------------------------------------
# parallel classes and the combinatorial conditions


@dataclass
class _Class:
    key: tuple[int, ...]
    members: list[tuple[str, tuple]] = field(default_factory=list)   # (label, level in key orientation)
    families: list[tuple[int, int]] = field(default_factory=list)    # (family index, sign vs key)


def _build_classes(a: Arrangement, exact: bool) -> list[_Class]:
    classes: dict[tuple[int, ...], _Class] = {}

    def get(key):
        if key not in classes:
            classes[key] = _Class(key)
        return classes[key]

    conv = (lambda v: tuple(v)) if exact else (lambda v: tuple(float(c) for c in v))
    for i, f in enumerate(a.flats):
        key, lev = f.canonical()
        get(key).members.append((f"flat[{i}]", conv(lev)))
    for j, g in enumerate(a.families):
        s = _canonical_sign(g.u)
        get(tuple(s * c for c in g.u)).families.append((j, s))
    return list(classes.values())


class _Levels:
    """Arithmetic on 3-component levels, exact or floating."""

    def __init__(self, exact: bool, tol: float):
        self.exact = exact
        self.tol = tol

    def combo(self, coeffs, levels):
        if self.exact:
            return tuple(sum((c * lv[i] for c, lv in zip(coeffs, levels)), Fraction(0))
                         for i in range(3))
        return tuple(sum(float(c) * lv[i] for c, lv in zip(coeffs, levels)) for i in range(3))

    def equal(self, l1, l2) -> bool:
        if self.exact:
            return l1 == l2
        return _levels_equal(l1, l2, self.tol)


def _member_levels(cls: _Class, a: Arrangement, K: int, exact: bool) -> list[tuple[str, tuple]]:
    out = list(cls.members)
    for j, s in cls.families:
        g = a.families[j]
        for k in range(1, K + 1):
            lev = g.level(k)
            lev = tuple(s * c for c in lev) if exact else tuple(s * float(c) for c in lev)
            out.append((f"family[{j}][{k}]", lev))
    return out


def _find_in_class(cls: _Class, a: Arrangement, level, L: _Levels) -> str | None:
    for label, lev in cls.members:
        if L.equal(lev, level):
            return label
    for j, s in cls.families:
        k = a.families[j].index_of(tuple(s * c for c in level), L.tol)
        if k is not None:
            return f"family[{j}][{k}]"
    return None


def _mode(a: Arrangement, tol: float | None) -> _Levels:
    exact = a.exact and tol is None
    return _Levels(exact, FLOAT_TOL if tol is None else tol)


def _certificate(a: Arrangement, K: int, L: _Levels, classes: list[_Class]) -> tuple[bool, str]:
    """Whether violations involving family members beyond K are excluded."""
    if not a.families:
        return True, "no infinite families"
    keys = {tuple(_canonical_sign(g.u) * c for c in g.u) for g in a.families}
    if len(keys) > 1:
        return False, "families are not mutually parallel; only members k <= K were checked"
    n = a.dimension
    fam_key = next(iter(keys))
    others = [(i, f) for i, f in enumerate(a.flats) if f.canonical()[0] != fam_key]
    for j, g in enumerate(a.families):
        bound = 0.0
        for r in range(1, n):
            for sub in combinations(others, r):
                W = [f.u for _, f in sub]
                if lattice.rank(W) < r:
                    continue
                coeffs = lattice.express_in_basis(W, g.u)
                if coeffs is None:
                    continue
                v = L.combo(coeffs, [f.lam for _, f in sub])
                bound = max(bound, _vec_norm(v))
        if g.level_norm_lower_bound(K + 1) <= bound * (1 + L.tol) + L.tol:
            return False, (f"family {j}: levels beyond k={K} are not yet larger than "
                           f"the attainable value {bound:.6g}")
    return True, "families are parallel and outgrow every reachable level beyond the truncation"


def condition_a(a: Arrangement, K: int = DEFAULT_TRUNCATION, tol: float | None = None) -> ConditionReport:
    """Check that no point lies on n+1 flats.

    Candidate points come from n flats with independent weights; a point lies
    on a flat of another parallel class c exactly when the corresponding linear
    combination of levels equals a level of c.
    """
    L = _mode(a, tol)
    n = a.dimension
    classes = _build_classes(a, L.exact)
    seen: set[frozenset] = set()
    violations = []
    members = [_member_levels(c, a, K, L.exact) for c in classes]
    for combo in combinations(range(len(classes)), n):
        U = [classes[c].key for c in combo]
        if lattice.int_det(U) == 0:
            continue
        rest = [d for d in range(len(classes)) if d not in combo]
        coeffs = {d: lattice.express_in_basis(U, classes[d].key) for d in rest}
        for tup in product(*(members[c] for c in combo)):
            levels = [lev for _, lev in tup]
            hits = []
            for d in rest:
                lab = _find_in_class(classes[d], a, L.combo(coeffs[d], levels), L)
                if lab is not None:
                    hits.append(lab)
            if len(hits) + n >= n + 1:
                labels = frozenset([lab for lab, _ in tup] + hits)
                if labels in seen:
                    continue
                seen.add(labels)
                point = _solve_point(U, levels, L.exact)
                violations.append({"flats": sorted(labels), "count": len(labels),
                                   "point": _point_json(point)})
    certified, note = _certificate(a, K, L, classes)
    return ConditionReport(ok=not violations, violations=violations, truncation=K,
                           certified=certified, note=note)


def condition_b(a: Arrangement, K: int = DEFAULT_TRUNCATION, tol: float | None = None) -> ConditionReport:
    """Check that every n intersecting flats have weights forming a Z-basis."""
    L = _mode(a, tol)
    n = a.dimension
    classes = _build_classes(a, L.exact)
    members = [_member_levels(c, a, K, L.exact) for c in classes]
    violations = []
    for combo in combinations(range(len(classes)), n):
        U = [classes[c].key for c in combo]
        det = lattice.int_det(U)
        if det != 0:
            if abs(det) != 1:
                example = [members[c][0][0] for c in combo]
                violations.append({"flats": example, "weights": [list(u) for u in U],
                                   "det": det, "scope": "every choice of members"})
            continue
        basis_pos = lattice.independent_rows(U)
        dep_pos = [p for p in range(n) if p not in basis_pos]
        B = [U[p] for p in basis_pos]
        coeffs = {p: lattice.express_in_basis(B, U[p]) for p in dep_pos}
        for tup in product(*(members[combo[p]] for p in basis_pos)):
            levels = [lev for _, lev in tup]
            hits = []
            for p in dep_pos:
                lab = _find_in_class(classes[combo[p]], a, L.combo(coeffs[p], levels), L)
                if lab is None:
                    break
                hits.append(lab)
            else:
                violations.append({"flats": [lab for lab, _ in tup] + hits,
                                   "weights": [list(u) for u in U], "det": 0,
                                   "scope": "these flats"})
    certified, note = _certificate(a, K, L, classes)
    return ConditionReport(ok=not violations, violations=violations, truncation=K,
                           certified=certified, note=note)


def _solve_point(U, levels, exact: bool):
    n = len(U)
    if exact:
        out = []
        for c in range(3):
            out.append(lattice.solve_rational(U, [lv[c] for lv in levels]))
        return out
    Um = np.array(U, dtype=float)
    Lm = np.array([[float(x) for x in lv] for lv in levels])
    return np.linalg.solve(Um, Lm).T.tolist() if n else []


def _point_json(point) -> list[list]:
    return [[str(x) if isinstance(x, Fraction) else float(x) for x in row] for row in point]


def is_smooth(a: Arrangement, K: int = DEFAULT_TRUNCATION) -> bool:
    return (validate_primitive(a).ok and condition_a(a, K).ok and condition_b(a, K).ok)


# ---------------------------------------------------------------------------
# finiteness of the weight set


@dataclass
class NormalForm:
    transform: list[list[int]]
    basis: list[tuple[int, ...]]
    weights: list[tuple[int, ...]]
    transformed: list[tuple[int, ...]]
    ok: bool

    @property
    def distinct_count(self) -> int:
        return len(set(self.weights))


def weight_normal_form(a: Arrangement) -> NormalForm:
    """Change Z-basis so that some weights become e_1..e_n.

    Under condition (b) every transformed weight lies in {-1, 0, 1}^n.
    """
    n = a.dimension
    W = list(dict.fromkeys(a.weights()))
    for sub in combinations(W, n):
        if abs(lattice.int_det(sub)) == 1:
            # columns of A are the basis vectors; A^{-1} sends them to e_i
            A = [[sub[j][i] for j in range(n)] for i in range(n)]
            T = lattice.int_inverse_unimodular(A)
            tw = [tuple(sum(T[i][k] * w[k] for k in range(n)) for i in range(n)) for w in W]
            ok = all(c in (-1, 0, 1) for w in tw for c in w)
            return NormalForm(T, list(sub), W, tw, ok)
    raise ValueError("no Z-basis of Z^n among the weights; condition (b) cannot hold")


# ---------------------------------------------------------------------------
# convergence of infinite families


@dataclass
class FamilyVerdict:
    family: int
    converges: bool
    N: int | None
    tail_bound: float | None = None
    partial_sum: float | None = None
    summed_terms: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceReport:
    converges: bool
    families: list[FamilyVerdict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"converges": self.converges, "families": [f.to_dict() for f in self.families]}


def power_tail(N: int, p: float) -> float:
    """sum_{k>N} k^-p <= N^(1-p)/(p-1) for p > 1."""
    return float(N) ** (1.0 - p) / (p - 1.0)


def monomial_tail_bound(N: int, weight: float, scale: float, power: float, offset: float) -> float:
    """Upper bound for sum_{k>N} weight / (scale k^p - offset), valid when scale N^p > offset.

    Returns inf when N is too small for the bound to apply.
    """
    lead = scale * float(N) ** power
    theta = max(offset, 0.0) / lead if lead > 0 else math.inf
    if theta >= 1.0:
        return math.inf
    return weight * power_tail(N, power) / (scale * (1.0 - theta))


def smallest_index(pred, start: int = 1, limit: int = 10**18) -> int:
    """Smallest integer N >= start with pred(N) true, for a monotone predicate."""
    hi = max(start, 1)
    while not pred(hi):
        hi *= 2
        if hi > limit:
            raise ValueError("no index satisfies the predicate below the limit")
    lo = max(start, hi // 2)
    if pred(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _family_terms(g: FamilyGenerator, start: int, stop: int) -> np.ndarray:
    lv = np.linalg.norm(g.levels(start, stop), axis=1) / g.norm_u
    return 1.0 / (1.0 + lv)


def _chunked_partial(g: FamilyGenerator, N: int, chunk: int = 1_000_000) -> float:
    total = 0.0
    for start in range(1, N + 1, chunk):
        total += float(_family_terms(g, start, min(N + 1, start + chunk)).sum())
    return total


def convergence_check(a: Arrangement, tail_tol: float = 1e-8, divergence_bound: float = 10.0,
                      max_sum_terms: int = 10**7) -> ConvergenceReport:
    """Decide sum_k 1/(1 + |lambda_k|/|u_k|) < inf family by family.

    Convergent families (power > 1) report the first N whose rigorous tail bound
    is below ``tail_tol``; divergent ones report the first N whose partial sum
    exceeds ``divergence_bound`` (searched up to ``max_sum_terms``).
    """
    verdicts = []
    for j, g in enumerate(a.families):
        p, s, nu = float(g.power), float(g.scale), g.norm_u
        if p > 1.0:
            # 1/(1 + |l_k|/|u|) <= |u| / (s k^p - (|base| - |u|))
            def bound(N, g=g):
                return monomial_tail_bound(N, nu, s, p, g.base_norm - nu)
            N = smallest_index(lambda N: bound(N) < tail_tol)
            summed = min(N, max_sum_terms)
            verdicts.append(FamilyVerdict(j, True, N, bound(N), _chunked_partial(g, summed), summed))
        else:
            total, N = 0.0, None
            chunk = 100_000
            for start in range(1, max_sum_terms + 1, chunk):
                terms = _family_terms(g, start, min(max_sum_terms + 1, start + chunk))
                csum = total + np.cumsum(terms)
                hit = np.nonzero(csum > divergence_bound)[0]
                if hit.size:
                    N = start + int(hit[0])
                    total = float(csum[hit[0]])
                    break
                total = float(csum[-1])
            verdicts.append(FamilyVerdict(j, False, N, None, total, N or max_sum_terms))
    return ConvergenceReport(all(v.converges for v in verdicts), verdicts)


# ---------------------------------------------------------------------------
# kernel lattice of beta : Z^m -> Z^n


@dataclass
class KernelReport:
    basis: list[tuple[int, ...]]
    rank: int
    surjective: bool

    def to_dict(self) -> dict:
        return {"basis": [list(v) for v in self.basis], "rank": self.rank,
                "surjective": self.surjective}


def kernel_lattice(a: Arrangement) -> KernelReport:
    """Integer basis of ker(beta), beta(e_k) = u_k, over the explicit flats."""
    if a.families:
        raise ValueError("kernel_lattice needs a finite arrangement; call truncate() first")
    if not a.spans():
        raise ValueError("weights do not span R^n")
    n, m = a.dimension, len(a.flats)
    B = [[a.flats[k].u[i] for k in range(m)] for i in range(n)]
    H, U, r = lattice.column_hermite(B)
    basis = [tuple(U[i][j] for i in range(m)) for j in range(r, m)]
    # beta is onto Z^n iff the non-zero echelon columns are unimodular
    surjective = r == n and abs(lattice.int_det([[H[i][j] for j in range(n)] for i in range(n)])) == 1
    return KernelReport(basis, m - r, surjective)

