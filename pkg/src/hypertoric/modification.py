"""Arrangement transforms: adding a flat, Taub-NUT deformation, scaling, A_k data, cut regions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arrangement import Arrangement, FamilyGenerator, Flat, as_number
from .potential_metric import SlicePotential, potential_values, slice

CONVENTIONS = ("moment", "inverse")
DEFAULT_CONVENTION = "moment"


def modify(a: Arrangement, f: Flat) -> Arrangement:
    """Append a flat; nothing is discarded, the new flat only adds a singular locus."""
    if len(f.u) != a.dimension:
        raise ValueError(f"flat weight has length {len(f.u)}, arrangement has n={a.dimension}")
    return a.with_flat(f)


def flat_h(point=(0, 0, 0), c=0) -> Arrangement:
    """The flat model H: one point in dimension one, optionally with a constant term."""
    return Arrangement(1, (Flat((1,), tuple(point)),), (), ((c,),))


def gibbons_hawking(points: Sequence[Sequence], c=0) -> Arrangement:
    return Arrangement(1, tuple(Flat((1,), tuple(p)) for p in points), (), ((c,),))


@dataclass
class AkData:
    potential: SlicePotential
    arrangement: Arrangement
    b2: int
    multi_taub_nut: bool
    product_s1_r3: bool

    def to_dict(self) -> dict:
        return {"points": self.potential.points.tolist(), "c": self.potential.c, "b2": self.b2,
                "multi_taub_nut": self.multi_taub_nut, "product_s1_r3": self.product_s1_r3}


def iterate_Ak(k: int, points: Sequence[Sequence], c=0) -> AkData:
    """Gibbons-Hawking A_k data from k+1 centres, built by repeated modification.

    ``k = -1`` with no points and ``c > 0`` is the product S^1 x R^3.
    """
    pts = [tuple(p) for p in points]
    if len(pts) != k + 1:
        raise ValueError(f"A_{k} needs {k + 1} points, got {len(pts)}")
    if as_number(c) < 0:
        raise ValueError("constant term must be non-negative")
    if not pts:
        if not as_number(c) > 0:
            raise ValueError("no centres and c = 0 is not a metric")
        a = Arrangement(1, (), (), ((c,),))
    else:
        a = flat_h(pts[0], c)
        for p in pts[1:]:
            a = modify(a, Flat((1,), p))
    pot = slice(a, np.zeros((3, 1)), [1])
    return AkData(pot, a, max(len(pts) - 1, 0), float(c) > 0 and bool(pts), float(c) > 0 and not pts)


def taub_nut_deform(a: Arrangement, C) -> Arrangement:
    n = a.dimension
    C = [[as_number(x) for x in row] for row in np.asarray(C, dtype=object).reshape(n, n)]
    Cf = np.array([[float(x) for x in row] for row in C])
    if not np.array_equal(Cf, Cf.T):
        raise ValueError("Taub-NUT matrix must be symmetric")
    T = tuple(tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(a.taub_nut, C))
    return Arrangement(n, a.flats, a.families, T)


def _mul(x, C):
    if isinstance(x, Fraction) and isinstance(C, Fraction):
        return x * C
    return float(x) * float(C)


def scale(a: Arrangement, C, convention: str = DEFAULT_CONVENTION) -> Arrangement:
    """Rescale so that the metric is multiplied by C and the constant term becomes c/C.

    ``"moment"`` maps levels lambda -> C lambda, which gives V'(C p) = V(p)/C.
    ``"inverse"`` maps lambda -> lambda / C instead; it fails that identity for C != 1.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    C = as_number(C)
    if not C > 0:
        raise ValueError("scale factor must be positive")
    f = C if convention == "moment" else (1 / C if isinstance(C, Fraction) else 1.0 / C)
    flats = tuple(Flat(fl.u, tuple(_mul(x, f) for x in fl.lam), fl.a) for fl in a.flats)
    fams = tuple(FamilyGenerator(g.u, tuple(_mul(x, f) for x in g.base), g.direction,
                                 _mul(g.scale, f), g.power, g.a) for g in a.families)
    inv = 1 / C if isinstance(C, Fraction) else 1.0 / C
    T = tuple(tuple(_mul(x, inv) for x in row) for row in a.taub_nut)
    return Arrangement(a.dimension, flats, fams, T)


def scale_image(p, C: float, convention: str = DEFAULT_CONVENTION) -> np.ndarray:
    """Where a moment-map value p goes under the scaling."""
    p = np.asarray(p, dtype=float)
    return p * float(C) if convention == "moment" else p / float(C)


def scaling_defect(a: Arrangement, C, P, convention: str = DEFAULT_CONVENTION,
                   base=None, alpha=None) -> float:
    """max |V'(image of p) - V(p)/C| over the slice points P."""
    n = a.dimension
    base = np.zeros((3, n)) if base is None else np.asarray(base, dtype=float)
    alpha = [1] + [0] * (n - 1) if alpha is None else alpha
    P = np.atleast_2d(np.asarray(P, dtype=float))
    s0 = slice(a, base, alpha)
    img_base = base * float(C) if convention == "moment" else base / float(C)
    s1 = slice(scale(a, C, convention), img_base, alpha)
    v0, _ = potential_values(s0, P)
    v1, _ = potential_values(s1, scale_image(P, C, convention))
    return float(np.max(np.abs(v1 - v0 / float(C))))


def additivity_defect(a: Arrangement, f: Flat, P, base=None, alpha=None) -> float:
    """max |V_{a+f}(p) - V_a(p) - V_f(p)| on a slice, where V_f is the new flat's own term."""
    n = a.dimension
    base = np.zeros((3, n)) if base is None else np.asarray(base, dtype=float)
    alpha = np.asarray([1] + [0] * (n - 1) if alpha is None else alpha)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    before, _ = potential_values(slice(a, base, alpha), P)
    after, _ = potential_values(slice(modify(a, f), base, alpha), P)
    au = int(np.dot(alpha, f.u))
    if au == 0:
        single = np.zeros(len(P))
    else:
        q = (f.lam_array - base @ np.asarray(f.u, dtype=float)) / au
        single = 0.5 / (np.linalg.norm(alpha) * np.linalg.norm(P - q, axis=1))
    return float(np.max(np.abs(after - before - single)))


# ---------------------------------------------------------------------------
# the circle toy model of a cut


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def __contains__(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below

    def to_str(self) -> str:
        if self.empty:
            return "{}"
        if self.lo == self.hi:
            return f"{{{self.lo:g}}}"
        hi = "inf" if math.isinf(self.hi) else f"{self.hi:g}"
        return f"{'[' if self.lo_closed else '('}{self.lo:g}, {hi}{']' if self.hi_closed else ')'}"


EMPTY = Interval(1.0, 0.0, False, False)


@dataclass(frozen=True)
class CutRegionReport:
    """How the moment image [0, inf) of C under z -> |z|^2 is treated at level epsilon."""

    epsilon: float
    removed: Interval
    collapsed: Interval
    unchanged: Interval
    note: str = ""

    def region_of(self, x: float) -> str:
        for name in ("removed", "collapsed", "unchanged"):
            if x in getattr(self, name):
                return name
        raise ValueError(f"{x} is outside the moment image")

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "removed": self.removed.to_str(),
                "collapsed": self.collapsed.to_str(), "unchanged": self.unchanged.to_str(),
                "note": self.note}


def cut_region(epsilon: float) -> CutRegionReport:
    eps = float(epsilon)
    if eps < 0:
        return CutRegionReport(eps, EMPTY, EMPTY, Interval(0.0, math.inf, True, False),
                               "level below the image: nothing changes")
    return CutRegionReport(eps, Interval(0.0, eps, True, False), Interval(eps, eps, True, True),
                           Interval(eps, math.inf, False, False), "symplectic cut")


def modification_region(epsilon: float) -> CutRegionReport:
    """The hyperKaehler modification keeps every point; only the level set is collapsed."""
    eps = float(epsilon)
    return CutRegionReport(eps, EMPTY, Interval(eps, eps, True, True),
                           Interval(-math.inf, math.inf, False, False),
                           "modification: nothing removed")
