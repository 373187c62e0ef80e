"""JSON file formats for arrangements and moment-map targets.

Exact numbers are written as JSON integers or "p/q" strings and read back as
``Fraction``; floats are written with ``repr`` so the round trip is bit-exact.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .arrangement import Arrangement, FamilyGenerator, Flat
from .nonabelian_fibers import MomentTarget

FORMAT_VERSION = 1
DEFAULT_A = Fraction(1, 2)


class FormatError(ValueError):
    """Malformed input; the message names the offending field."""


def _num(x: Any, where: str):
    if isinstance(x, bool):
        raise FormatError(f"{where}: expected a number, got a boolean")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise FormatError(f"{where}: non-finite number")
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"{where}: cannot parse {x!r} as a rational") from None
    raise FormatError(f"{where}: expected a number, got {type(x).__name__}")


def _int(x: Any, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(f"{where}: expected an integer")
    return x


def _list(x: Any, where: str, length: int | None = None) -> list:
    if not isinstance(x, list):
        raise FormatError(f"{where}: expected a list")
    if length is not None and len(x) != length:
        raise FormatError(f"{where}: expected {length} entries, got {len(x)}")
    return x


def encode_number(x) -> Any:
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise FormatError(f"{where}: missing field {key!r}")
    return d[key]


# ---------------------------------------------------------------------------
# arrangements


def arrangement_from_dict(d: Any) -> Arrangement:
    if not isinstance(d, dict):
        raise FormatError("top level: expected an object")
    if "group" in d:
        raise FormatError("top level: this is a moment-map target, not an arrangement")
    version = _require(d, "version", "top level")
    if version != FORMAT_VERSION:
        raise FormatError(f"version: unsupported format version {version!r}")
    n = _int(_require(d, "dimension", "top level"), "dimension")
    if n < 1:
        raise FormatError("dimension: must be at least 1")
    flats = []
    for i, fd in enumerate(_list(d.get("flats", []), "flats")):
        where = f"flats[{i}]"
        if not isinstance(fd, dict):
            raise FormatError(f"{where}: expected an object")
        u = [_int(c, f"{where}.u[{j}]") for j, c in enumerate(_list(_require(fd, "u", where), f"{where}.u", n))]
        lam = [_num(c, f"{where}.lambda[{j}]")
               for j, c in enumerate(_list(_require(fd, "lambda", where), f"{where}.lambda", 3))]
        a = _num(fd["a"], f"{where}.a") if "a" in fd else DEFAULT_A
        try:
            flats.append(Flat(tuple(u), tuple(lam), a))
        except ValueError as e:
            raise FormatError(f"{where}: {e}") from None
    fams = []
    for i, gd in enumerate(_list(d.get("families", []), "families")):
        where = f"families[{i}]"
        if not isinstance(gd, dict):
            raise FormatError(f"{where}: expected an object")
        u = [_int(c, f"{where}.u[{j}]") for j, c in enumerate(_list(_require(gd, "u", where), f"{where}.u", n))]
        base = [_num(c, f"{where}.base[{j}]")
                for j, c in enumerate(_list(_require(gd, "base", where), f"{where}.base", 3))]
        direc = [_num(c, f"{where}.direction[{j}]")
                 for j, c in enumerate(_list(_require(gd, "direction", where), f"{where}.direction", 3))]
        s = _num(_require(gd, "scale", where), f"{where}.scale")
        p = _num(_require(gd, "power", where), f"{where}.power")
        a = _num(gd["a"], f"{where}.a") if "a" in gd else DEFAULT_A
        try:
            fams.append(FamilyGenerator(tuple(u), tuple(base), tuple(direc), s, p, a))
        except ValueError as e:
            raise FormatError(f"{where}: {e}") from None
    T = None
    if "taub_nut" in d:
        rows = _list(d["taub_nut"], "taub_nut", n)
        T = tuple(tuple(_num(c, f"taub_nut[{i}][{j}]") for j, c in enumerate(_list(r, f"taub_nut[{i}]", n)))
                  for i, r in enumerate(rows))
    known = {"version", "dimension", "flats", "families", "taub_nut"}
    extra = set(d) - known
    if extra:
        raise FormatError(f"top level: unknown field(s) {sorted(extra)}")
    try:
        return Arrangement(n, tuple(flats), tuple(fams), T)
    except ValueError as e:
        raise FormatError(f"arrangement: {e}") from None


def arrangement_to_dict(a: Arrangement) -> dict:
    def flat(f: Flat) -> dict:
        d = {"u": list(f.u), "lambda": [encode_number(c) for c in f.lam]}
        if f.a != DEFAULT_A:
            d["a"] = encode_number(f.a)
        return d

    def fam(g: FamilyGenerator) -> dict:
        d = {"u": list(g.u), "base": [encode_number(c) for c in g.base],
             "direction": [encode_number(c) for c in g.direction],
             "scale": encode_number(g.scale), "power": encode_number(g.power)}
        if g.a != DEFAULT_A:
            d["a"] = encode_number(g.a)
        return d

    return {
        "version": FORMAT_VERSION,
        "dimension": a.dimension,
        "flats": [flat(f) for f in a.flats],
        "families": [fam(g) for g in a.families],
        "taub_nut": [[encode_number(c) for c in row] for row in a.taub_nut],
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def parse_json(text: str, where: str = "input") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{where}: line {e.lineno} column {e.colno}: {e.msg}") from None


def load_arrangement(path) -> Arrangement:
    return arrangement_from_dict(parse_json(Path(path).read_text(), str(path)))


def save_arrangement(a: Arrangement, path) -> None:
    Path(path).write_text(dumps(arrangement_to_dict(a)))


# ---------------------------------------------------------------------------
# moment-map targets


def _complex_matrix(x: Any, where: str, n: int | None = None) -> np.ndarray:
    rows = _list(x, where, n)
    n = len(rows)
    out = np.zeros((n, n), dtype=complex)
    for i, r in enumerate(_list(rows, where)):
        for j, c in enumerate(_list(r, f"{where}[{i}]", n)):
            pair = _list(c, f"{where}[{i}][{j}]", 2)
            re, im = (float(_num(v, f"{where}[{i}][{j}]")) for v in pair)
            out[i, j] = complex(re, im)
    return out


def target_from_dict(d: Any) -> tuple[str, MomentTarget]:
    if not isinstance(d, dict):
        raise FormatError("top level: expected an object")
    if d.get("version") != FORMAT_VERSION:
        raise FormatError(f"version: unsupported format version {d.get('version')!r}")
    group = _require(d, "group", "top level")
    if group not in ("su2", "su3"):
        raise FormatError(f"group: expected 'su2' or 'su3', got {group!r}")
    n = 2 if group == "su2" else 3
    alpha = _complex_matrix(_require(d, "alpha", "top level"), "alpha", n)
    beta = _complex_matrix(_require(d, "beta", "top level"), "beta", n)
    try:
        return group, MomentTarget(alpha, beta)
    except ValueError as e:
        raise FormatError(f"target: {e}") from None


def target_to_dict(t: MomentTarget) -> dict:
    enc = lambda M: [[[float(c.real), float(c.imag)] for c in row] for row in M]
    return {"version": FORMAT_VERSION, "group": f"su{t.n}", "alpha": enc(t.alpha), "beta": enc(t.beta)}


def load_any(path) -> tuple[str, Any]:
    """("arrangement", Arrangement) or (group, MomentTarget) depending on the file."""
    d = parse_json(Path(path).read_text(), str(path))
    if isinstance(d, dict) and "group" in d:
        return target_from_dict(d)
    return "arrangement", arrangement_from_dict(d)
