"""Command-line interface: ``htk validate|eval|fiber|transform``.

Reports are JSON on stdout, grids are CSV files.  Exit codes: 0 success,
2 violations or domain errors, 1 malformed input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import io as htk_io
from .arrangement import (Arrangement, DEFAULT_TRUNCATION, condition_a, condition_b,
                          convergence_check, validate_primitive, weight_normal_form)
from .modification import (DEFAULT_CONVENTION, additivity_defect, cut_region, iterate_Ak, modify,
                           scale, scaling_defect, taub_nut_deform)
from .nonabelian_fibers import classify, oracle_classify
from .potential_metric import (DEFAULT_STEP, DEFAULT_TOL, harmonic_check, metric_matrix,
                               polyharmonic_check, potential_V, ratio_test, slice, slice_point)
from .quotient import fiber_point, zero_set_residual

EXIT_OK, EXIT_PARSE, EXIT_FAIL = 0, 1, 2
GRID_MARGIN = 1e-6


class DomainError(Exception):
    """Valid input that the requested computation cannot handle."""


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def threads() -> int:
    try:
        return max(1, int(os.environ.get("HTK_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return os.cpu_count() or 1


def parallel_map(fn, items: list) -> list:
    """Map in a thread pool; results keep input order."""
    k = threads()
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def memo(fn):
    cache = {}
    return lambda h: cache[h] if h in cache else cache.setdefault(h, fn(h))


def digest(path) -> str | None:
    if path is None:
        return None
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def report(command: str, args: argparse.Namespace, body: dict, started: float) -> dict:
    out = {"tool": "htk", "version": __version__, "command": command,
           "arguments": {k: v for k, v in sorted(vars(args).items())
                         if k not in ("func", "timing") and v is not None},
           "input_digest": digest(getattr(args, "file", None))}
    out.update(body)
    if getattr(args, "timing", False):
        out["timing_s"] = time.perf_counter() - started
    return out


def emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, Fraction):
        return htk_io.encode_number(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def parse_grid(text: str) -> np.ndarray:
    """'a:b:k,c:d:l,e:f:m' -> points of the product grid in row-major order."""
    axes = []
    parts = text.split(",")
    if len(parts) != 3:
        raise htk_io.FormatError("--grid: need three comma-separated axes lo:hi:count")
    for p in parts:
        bits = p.split(":")
        try:
            if len(bits) == 1:
                axes.append(np.array([float(bits[0])]))
            elif len(bits) == 3:
                axes.append(np.linspace(float(bits[0]), float(bits[1]), int(bits[2])))
            else:
                raise ValueError
        except ValueError:
            raise htk_io.FormatError(f"--grid: cannot parse axis {p!r}") from None
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


def parse_slice(a: Arrangement, base: str | None, alpha: str | None) -> tuple[np.ndarray, list[int]]:
    n = a.dimension
    if alpha is None:
        al = [1] + [0] * (n - 1)
    else:
        try:
            al = [int(x) for x in alpha.split(",")]
        except ValueError:
            raise htk_io.FormatError("--alpha: expected comma-separated integers") from None
        if len(al) != n:
            raise htk_io.FormatError(f"--alpha: expected {n} entries")
    if base is None:
        b = np.zeros((3, n))
    else:
        b = np.asarray(htk_io.parse_json(base, "--base"), dtype=float)
        if b.shape != (3, n):
            raise htk_io.FormatError(f"--base: expected a 3x{n} array")
    return b, al


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    a = htk_io.load_arrangement(args.file)
    K = args.truncation
    prim = validate_primitive(a)
    ca = condition_a(a, K)
    cb = condition_b(a, K)
    conv = convergence_check(a)
    body = {"primitive": prim.to_dict(), "condition_a": ca.to_dict(), "condition_b": cb.to_dict(),
            "convergence": conv.to_dict()}
    ok = prim.ok and ca.ok and cb.ok and conv.converges
    if ok:
        try:
            nf = weight_normal_form(a)
            body["normal_form"] = {"transform": nf.transform, "weights": [list(w) for w in nf.transformed],
                                   "entries_in_unit_range": nf.ok, "distinct_weights": nf.distinct_count}
        except ValueError as e:
            body["normal_form"] = {"error": str(e)}
    body["verdict"] = "pass" if ok else "fail"
    emit(report("validate", args, body, t0))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# eval


def _check_margin(sp, P: np.ndarray) -> None:
    if len(sp.points):
        d = np.linalg.norm(P[:, None, :] - sp.points[None], axis=2).min()
        if d < GRID_MARGIN:
            raise DomainError(f"grid comes within {d:.3g} of a flat")
    for fam in sp.families:
        d = np.linalg.norm(P[:, None, :] - fam.points(1, 1 + 4096)[None], axis=2).min()
        if d < GRID_MARGIN:
            raise DomainError(f"grid comes within {d:.3g} of a flat")


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    a = htk_io.load_arrangement(args.file)
    conv = convergence_check(a)
    if not conv.converges:
        raise DomainError("arrangement has a divergent family")
    base, alpha = parse_slice(a, args.base, args.alpha)
    P = parse_grid(args.grid)
    try:
        sp = slice(a, base, alpha)
    except ValueError as e:
        raise DomainError(str(e)) from None
    _check_margin(sp, P)
    n = a.dimension
    tol, h = args.tol, args.fd_step
    rows: list[list[str]]
    if args.mode == "potential":
        header = ["qx", "qy", "qz", "V"]
        vals = parallel_map(lambda p: potential_V(sp, p, tol), list(P))
        rows = [[fmt(c) for c in p] + [fmt(v)] for p, v in zip(P, vals)]
    elif args.mode == "metric":
        header = [f"b_{c}{i}" for c in range(3) for i in range(n)] + \
                 [f"V_{i + 1}{j + 1}" for i in range(n) for j in range(n)]

        def one(q):
            b = slice_point(base, alpha, q)
            return b, metric_matrix(a, b, tol).V
        rows = [[fmt(x) for x in b.ravel()] + [fmt(x) for x in V.ravel()]
                for b, V in parallel_map(one, list(P))]
    elif args.mode == "harmonic":
        header = ["qx", "qy", "qz", "V", "residual_h", "residual_h2", "ratio", "pass"]

        def one(q):
            chk = memo(lambda hh: harmonic_check(sp, q, hh, tol))
            ok, ratio = ratio_test(chk, h)
            return potential_V(sp, q, tol), chk(h).residual, chk(h / 2).residual, ratio, ok
        rows = [[fmt(c) for c in p] + [fmt(v), fmt(r1), fmt(r2), fmt(rt), str(int(ok))]
                for p, (v, r1, r2, rt, ok) in zip(P, parallel_map(one, list(P)))]
    else:
        header = ["qx", "qy", "qz", "i", "j", "residual_h", "residual_h2", "ratio", "pass"]

        def one(q):
            out = []
            for i in range(n):
                for j in range(i, n):
                    chk = memo(lambda hh, i=i, j=j: polyharmonic_check(a, base, alpha, i, j, q, hh, tol))
                    ok, ratio = ratio_test(chk, h)
                    out.append((i + 1, j + 1, chk(h).residual, chk(h / 2).residual, ratio, ok))
            return out
        rows = []
        for p, entries in zip(P, parallel_map(one, list(P))):
            for i, j, r1, r2, rt, ok in entries:
                rows.append([fmt(c) for c in p] + [str(i), str(j), fmt(r1), fmt(r2), fmt(rt), str(int(ok))])
    text = ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    Path(args.out).write_text(text)
    body = {"mode": args.mode, "rows": len(rows), "output": str(args.out),
            "output_digest": "sha256:" + hashlib.sha256(text.encode()).hexdigest(),
            "tolerance": tol, "slice": {"base": base.tolist(), "alpha": alpha, "constant": sp.c,
                                        "points": len(sp.points), "families": len(sp.families)}}
    if a.families:
        body["families"] = conv.to_dict()["families"]
        body["note"] = f"infinite families truncated with tail bound below {tol:g} per value"
    if args.mode in ("harmonic", "polyharmonic"):
        body["ratio_pass_fraction"] = float(np.mean([r[-1] == "1" for r in rows])) if rows else 1.0
    emit(report("eval", args, body, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# fiber


def cmd_fiber(args) -> int:
    t0 = time.perf_counter()
    kind, obj = htk_io.load_any(args.file)
    if args.group == "torus":
        if kind != "arrangement":
            raise htk_io.FormatError("torus mode needs an arrangement file")
        a = obj
        if a.families:
            a = a.truncate(args.truncation)
        if args.b is not None:
            b = np.asarray(htk_io.parse_json(args.b, "--b"), dtype=float)
            if b.shape != (3, a.dimension):
                raise htk_io.FormatError(f"--b: expected a 3x{a.dimension} array")
        else:
            b = np.random.default_rng(args.seed).normal(size=(3, a.dimension))
        x = fiber_point(a, b)
        rec, res = zero_set_residual(a, x)
        body = {"group": "torus", "b": b.tolist(), "recovered": rec.tolist(), "residual": res,
                "coords": [list(q.components()) for q in x.coords],
                "zero_coords": [k for k, q in enumerate(x.coords) if q.norm() == 0.0]}
        emit(report("fiber", args, body, t0))
        return EXIT_OK
    if kind == "arrangement" or kind != args.group:
        raise htk_io.FormatError(f"expected a {args.group} target file")
    fc = classify(obj)
    body = {"group": args.group, "fiber": fc.to_dict()}
    if args.oracle:
        oc = oracle_classify(obj)
        body["oracle"] = {"label": oc.label, "moduli": oc.moduli}
        body["agree"] = oc.kind == fc.kind and oc.count == fc.count
    emit(report("fiber", args, body, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# transform


def _sample_points(seed: int, k: int = 100) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-3, 3, size=(k, 3))


def cmd_transform(args) -> int:
    t0 = time.perf_counter()
    body: dict = {"op": args.op}
    if args.op == "cut":
        if args.epsilon is None:
            raise htk_io.FormatError("--epsilon is required for cut")
        body["region"] = cut_region(args.epsilon).to_dict()
        emit(report("transform", args, body, t0))
        return EXIT_OK
    if args.op == "iterate-ak":
        if args.k is None:
            raise htk_io.FormatError("--k is required for iterate-ak")
        if args.points is not None:
            pts = htk_io.parse_json(args.points, "--points")
        else:
            pts = [[j, 0, 0] for j in range(args.k + 1)]
        c = htk_io._num(htk_io.parse_json(args.c, "--c"), "--c") if args.c is not None else 0
        try:
            data = iterate_Ak(args.k, pts, c)
        except ValueError as e:
            raise DomainError(str(e)) from None
        result = data.arrangement
        body.update({"b2": data.b2, "points": len(data.potential.points),
                     "multi_taub_nut": data.multi_taub_nut, "product_s1_r3": data.product_s1_r3})
    else:
        if args.file is None:
            raise htk_io.FormatError(f"{args.op} needs an input arrangement file")
        a = htk_io.load_arrangement(args.file)
        P = _sample_points(args.seed)
        try:
            if args.op == "modify":
                if args.flat is None:
                    raise htk_io.FormatError("--flat is required for modify")
                fd = htk_io.parse_json(args.flat, "--flat")
                f = htk_io.arrangement_from_dict({"version": 1, "dimension": a.dimension,
                                                  "flats": [fd]}).flats[0]
                result = modify(a, f)
                if not a.families:
                    body["additivity_defect"] = additivity_defect(a, f, P)
            elif args.op == "taubnut":
                if args.matrix is None:
                    raise htk_io.FormatError("--matrix is required for taubnut")
                M = htk_io.parse_json(args.matrix, "--matrix")
                C = [[htk_io._num(x, "--matrix") for x in row] for row in M]
                result = taub_nut_deform(a, C)
                if not a.families:
                    B = np.random.default_rng(args.seed).normal(size=(10, 3, a.dimension))
                    d = [metric_matrix(result, b).V - metric_matrix(a, b).V for b in B]
                    body["metric_shift_spread"] = float(max(np.abs(x - d[0]).max() for x in d))
            elif args.op == "scale":
                if args.factor is None:
                    raise htk_io.FormatError("--factor is required for scale")
                C = htk_io._num(htk_io.parse_json(args.factor, "--factor"), "--factor")
                result = scale(a, C, args.convention)
                body["convention"] = args.convention
                if not a.families:
                    defect = scaling_defect(a, C, P, args.convention)
                    body["scaling_defect"] = defect
                    body["identity_holds"] = defect <= 1e-12 * max(1.0, 1.0 / float(C))
            else:
                raise htk_io.FormatError(f"unknown op {args.op!r}")
        except ValueError as e:
            if isinstance(e, htk_io.FormatError):
                raise
            raise DomainError(str(e)) from None
    text = htk_io.dumps(htk_io.arrangement_to_dict(result))
    if args.out:
        Path(args.out).write_text(text)
        body["output"] = str(args.out)
    body["output_digest"] = "sha256:" + hashlib.sha256(text.encode()).hexdigest()
    emit(report("transform", args, body, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------


class Parser(argparse.ArgumentParser):
    """Usage errors are malformed input too, so they exit 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = Parser(prog="htk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"htk {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(sp):
        sp.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")

    v = sub.add_parser("validate", help="check primitivity, conditions (a)/(b) and convergence")
    v.add_argument("file")
    v.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION)
    common(v)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("eval", help="evaluate potentials, metrics or harmonicity residuals on a grid")
    e.add_argument("file")
    e.add_argument("--mode", choices=["potential", "metric", "harmonic", "polyharmonic"], default="potential")
    e.add_argument("--grid", default="-2:2:5,0.5,0.5", help="lo:hi:count per axis, comma separated; write --grid=-1:1:5,... for negative bounds")
    e.add_argument("--base", help="3xn JSON array: slice base point")
    e.add_argument("--alpha", help="comma-separated integer covector")
    e.add_argument("--tol", type=float, default=DEFAULT_TOL)
    e.add_argument("--fd-step", type=float, default=DEFAULT_STEP)
    e.add_argument("--out", default="htk_grid.csv")
    common(e)
    e.set_defaults(func=cmd_eval)

    f = sub.add_parser("fiber", help="classify a moment-map fibre or build a torus fibre point")
    f.add_argument("file")
    f.add_argument("--group", choices=["su2", "su3", "torus"], required=True)
    f.add_argument("--oracle", action="store_true")
    f.add_argument("--b", help="3xn JSON target for torus mode")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--truncation", type=int, default=64)
    common(f)
    f.set_defaults(func=cmd_fiber)

    t = sub.add_parser("transform", help="modify, deform, scale, build A_k data or describe a cut")
    t.add_argument("file", nargs="?")
    t.add_argument("--op", choices=["modify", "taubnut", "scale", "iterate-ak", "cut"], required=True)
    t.add_argument("--flat", help='JSON flat, e.g. {"u": [1], "lambda": ["1/2", 0, 0]}')
    t.add_argument("--matrix", help="JSON symmetric matrix for taubnut")
    t.add_argument("--factor", help="scale factor C > 0 (number or \"p/q\")")
    t.add_argument("--convention", choices=["moment", "inverse"], default=DEFAULT_CONVENTION)
    t.add_argument("--k", type=int)
    t.add_argument("--points", help="JSON list of centres for iterate-ak")
    t.add_argument("--c", help="constant term for iterate-ak")
    t.add_argument("--epsilon", type=float)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    common(t)
    t.set_defaults(func=cmd_transform)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (htk_io.FormatError, FileNotFoundError, IsADirectoryError) as e:
        sys.stderr.write(f"htk: input error: {e}\n")
        return EXIT_PARSE
    except DomainError as e:
        sys.stderr.write(f"htk: {e}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
