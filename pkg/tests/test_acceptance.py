"""Acceptance criteria at their stated tolerances and runtime budgets.

Each test carries a ``criterion`` marker; the terminal summary prints one
pass/fail line per criterion.
"""
import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hypertoric import io as htk_io
from hypertoric.arrangement import Arrangement, Flat, convergence_check, is_smooth, weight_normal_form
from hypertoric.core_algebra import join_target
from hypertoric.modification import additivity_defect, iterate_Ak, scaling_defect
from hypertoric.nonabelian_fibers import (CotangentPoint, MomentTarget, classify, classify_su2,
                                          classify_su3, distance, mu, oracle_classify)
from hypertoric.potential_metric import (SlicePotential, fd_hessian_x, harmonic_check,
                                         metric_matrix, polyharmonic_check, ratio_test, slice)
from hypertoric.quotient import fiber_point, zero_set_residual

from .helpers import (SAMPLES, case1_image_point, random_flats, random_point, random_special_unitary,
                      random_target, random_unimodular)

criterion = pytest.mark.criterion


@contextmanager
def budget(seconds: float):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"runtime {elapsed:.2f} s exceeds {seconds} s"


def off_points(rng, centres, k, margin=0.5, box=3.0):
    out = []
    while len(out) < k:
        p = rng.uniform(-box, box, size=3)
        if len(centres) == 0 or np.linalg.norm(centres - p, axis=1).min() >= margin:
            out.append(p)
    return np.array(out)


# ---------------------------------------------------------------------------


@criterion(1, "harmonicity of slice potentials")
def test_harmonicity():
    rng = np.random.default_rng(101)
    passed = total = 0
    with budget(5):
        for trial in range(20):
            m = int(rng.integers(1, 11))
            s = SlicePotential(rng.uniform(-2, 2, size=(m, 3)), rng.uniform(0.5, 2, size=m), trial % 2)
            for p in off_points(rng, s.points, 100):
                chk = {}
                get = lambda h: chk.setdefault(h, harmonic_check(s, p, h))
                ok, _ = ratio_test(get, 1e-2)
                assert get(1e-2).within_bound and get(5e-3).within_bound
                passed += ok
                total += 1
    assert passed >= 0.9 * total, f"ratio in [3, 5] at {passed}/{total} points"


@criterion(2, "polyharmonicity of V_ij")
def test_polyharmonicity():
    rng = np.random.default_rng(202)
    passed = total = 0
    with budget(30):
        for n in (1, 2, 3, 2, 3):
            a = random_flats(rng, n, int(rng.integers(3, 6)))
            slices = 0
            while slices < 20:
                base = rng.normal(size=(3, n))
                alpha = rng.integers(-2, 3, size=n)
                if not alpha.any():
                    continue
                try:
                    s = slice(a, base, alpha)
                except ValueError:
                    continue
                slices += 1
                for p in off_points(rng, s.points, 5):
                    for i in range(n):
                        for j in range(i, n):
                            chk = {}
                            get = lambda h: chk.setdefault(h, polyharmonic_check(a, base, alpha, i, j, p, h))
                            ok, _ = ratio_test(get, 1e-2)
                            assert get(1e-2).within_bound and get(5e-3).within_bound
                            passed += ok
                            total += 1
    assert passed >= 0.9 * total, f"ratio in [3, 5] for {passed}/{total} entries"


@criterion(3, "closed-form metric equals FD Hessian of F")
def test_metric_vs_fd_hessian():
    rng = np.random.default_rng(303)
    arrangements = [random_flats(rng, n, 5) for n in (1, 2, 3, 2, 3)]
    arrangements.append(htk_io.load_arrangement(SAMPLES / "toric_n2.json"))
    worst = 0.0
    with budget(10):
        count = 0
        while count < 100:
            a = arrangements[count % len(arrangements)]
            n = a.dimension
            x = rng.normal(size=n)
            z = rng.normal(size=n) + 1j * rng.normal(size=n)
            b = join_target(x, z, [1, 0, 0])
            if min(np.linalg.norm(b @ f.u_hat - f.lam_hat) for f in a.flats) < 0.2:
                continue
            V = metric_matrix(a, b).V
            H = fd_hessian_x(a, x, z, h=1e-4)
            worst = max(worst, np.linalg.norm(H - V) / np.linalg.norm(V))
            count += 1
    assert worst <= 1e-6, f"worst relative error {worst:.3e}"


@criterion(4, "convergence of families")
def test_convergence_hattori_accepted():
    with budget(5):
        v = convergence_check(htk_io.load_arrangement(SAMPLES / "hattori.json")).families[0]
    assert v.converges and v.tail_bound < 1e-8
    assert v.N <= 10**4, f"tail bound first drops below 1e-8 at N = {v.N}"


@criterion(4, "convergence of families")
def test_convergence_linear_rejected():
    with budget(5):
        v = convergence_check(htk_io.load_arrangement(SAMPLES / "linear_family.json")).families[0]
    assert not v.converges and v.partial_sum > 10
    assert v.N <= 3 * 10**4, f"partial sum first exceeds 10 at N = {v.N}"


@criterion(5, "finiteness of unimodular weight sets")
def test_finiteness():
    rng = np.random.default_rng(505)
    with budget(10):
        for _ in range(100):
            a = random_unimodular(rng)
            nf = weight_normal_form(a)
            assert nf.ok and all(c in (-1, 0, 1) for w in nf.transformed for c in w)
            assert nf.distinct_count <= 3 ** a.dimension


DYADIC_N3 = Arrangement(3, (
    Flat((1, 0, 0), (0, 0, 0)), Flat((0, 1, 0), ("1/2", 0, 0)), Flat((0, 0, 1), (0, 0, 0)),
    Flat((1, 1, 0), (1, "1/4", 0)), Flat((0, 1, 1), (-1, 0, "1/2"))))


@criterion(6, "surjectivity witnesses from fiber_point")
def test_surjectivity():
    names = ["flat_h", "a1_eguchi_hanson", "taub_nut", "goto_n2_truncated"]
    arrangements = [htk_io.load_arrangement(SAMPLES / f"{nm}.json") for nm in names] + [DYADIC_N3]
    rng = np.random.default_rng(606)
    with budget(5):
        for a in arrangements:
            assert is_smooth(a)
            n = a.dimension
            for t in range(1000):
                b = rng.integers(-16, 17, size=(3, n)) / 4.0
                k = None
                if t % 4 == 0:
                    # put b exactly on flat k: solve for a coordinate where u_k = +-1
                    k = int(rng.integers(len(a.flats)))
                    f = a.flats[k]
                    i = next(i for i, c in enumerate(f.u) if abs(c) == 1)
                    rest = sum(b[:, j] * f.u[j] for j in range(n) if j != i)
                    b[:, i] = (f.lam_array - rest) * f.u[i]
                x = fiber_point(a, b, rng.uniform(0, 2 * np.pi, size=len(a.flats)))
                rec, res = zero_set_residual(a, x)
                assert res <= 1e-10 and np.abs(rec - b).max() <= 1e-10
                if k is not None:
                    assert x.coords[k].norm() == 0.0


@criterion(7, "SU(2) classifier agrees with oracle")
def test_su2_vs_oracle():
    rng = np.random.default_rng(707)
    targets = [mu(random_point(rng, 2)) for _ in range(200)] + [random_target(rng, 2) for _ in range(200)]
    with budget(60):
        assert classify_su2(MomentTarget.zero(2)).label == "Point"
        for t in targets:
            fc, oc = classify_su2(t), oracle_classify(t)
            assert fc.kind == oc.kind
            for w in fc.witnesses:
                assert distance(w, t) <= 1e-9


def case2c_targets(X: float):
    """Targets built from z = (sqrt m, 0, 0), w = (0, xi1/sqrt m, 0) at both roots m of 2m + |xi1|^2/m = X."""
    xi1 = 0.9 + 0.4j
    disc = X * X - 8 * abs(xi1) ** 2
    roots = [(X + s * np.sqrt(disc)) / 4 for s in (1, -1)]
    return [mu(CotangentPoint([np.sqrt(m), 0, 0], [0, xi1 / np.sqrt(m), 0])) for m in roots]


@criterion(8, "SU(3) phenomena")
def test_su3_disconnected_fibre():
    labels = []
    with budget(30):
        for X in np.linspace(3, 60, 40):
            for t in case2c_targets(X):
                fc = classify_su3(t)
                assert fc.case == "2c"
                labels.append(fc.label)
    assert "Circles(2)" in labels, f"constructed Case 2(c) targets gave {sorted(set(labels))}"


@criterion(8, "SU(3) phenomena")
def test_su3_not_surjective():
    rng = np.random.default_rng(808)
    with budget(30):
        assert all(classify_su3(random_target(rng, 3)).kind == "empty" for _ in range(1000))


@criterion(8, "SU(3) phenomena")
def test_su3_case1_relation():
    rng = np.random.default_rng(809)
    targets = []
    for _ in range(100):
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        beta = np.diag(d - d.mean()) + np.triu(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), 1)
        targets.append(MomentTarget(random_target(rng, 3).alpha, beta))
    targets += [mu(case1_image_point(rng)) for _ in range(100)]
    with budget(30):
        nonempty = 0
        for t in targets:
            b = t.beta
            lam2, xi1, xi2, zeta = b[1, 1], b[0, 1], b[1, 2], b[0, 2]
            assert abs(3 * lam2 * xi2 - 2 * xi1 * zeta) > 1e-6
            nonempty += classify_su3(t).kind != "empty"
    assert nonempty == 0, f"{nonempty} Case-1 targets violating the relation have non-empty fibres"


@criterion(8, "SU(3) phenomena")
def test_su3_conjugation_invariance():
    rng = np.random.default_rng(810)
    targets = [mu(random_point(rng, 3)) for _ in range(10)] + [random_target(rng, 3) for _ in range(3)]
    targets += case2c_targets(10.0) + [MomentTarget.zero(3), mu(CotangentPoint([1, 0, 0], [0, 0, 0]))]
    with budget(30):
        for t in targets:
            ref = classify_su3(t)
            for _ in range(20):
                fc = classify_su3(t.conjugate(random_special_unitary(rng, 3)))
                assert (fc.kind, fc.count) == (ref.kind, ref.count)


@criterion(9, "modification generates A_k")
def test_modification_ak():
    rng = np.random.default_rng(909)
    with budget(5):
        prev = None
        for k in range(6):
            pts = [tuple(rng.normal(size=3)) for _ in range(k + 1)] if prev is None else \
                [tuple(f.lam_array) for f in prev.arrangement.flats] + [tuple(rng.normal(size=3))]
            d = iterate_Ak(k, pts)
            assert len(d.arrangement.flats) == k + 1 and d.b2 == k
            if prev is not None:
                new = d.arrangement.flats[-1]
                P = off_points(rng, d.potential.points, 100, margin=0.05)
                assert additivity_defect(prev.arrangement, new, P) <= 1e-12
            prev = d


@criterion(10, "scaling identity under the moment convention")
def test_scaling():
    rng = np.random.default_rng(1010)
    cases = [("a1_eguchi_hanson", [1]), ("taub_nut", [1]), ("toric_n2", [1, 2])]
    with budget(5):
        for name, alpha in cases:
            a = htk_io.load_arrangement(SAMPLES / f"{name}.json")
            s = slice(a, np.zeros((3, a.dimension)), alpha)
            P = off_points(rng, s.points, 100, margin=0.05)
            for C in (0.5, 2, 10):
                assert scaling_defect(a, C, P, "moment", alpha=alpha) <= 1e-12


def _cli(args, env_threads):
    env = dict(os.environ, HTK_THREADS=str(env_threads))
    r = subprocess.run([sys.executable, "-m", "hypertoric.cli", *args], capture_output=True, env=env, check=True)
    return r.stdout


@criterion(11, "CLI determinism and round-trip")
def test_cli_determinism_and_round_trip(tmp_path):
    with budget(5):
        outs = []
        for run, threads in enumerate((1, 4)):
            csv = tmp_path / f"grid{run}.csv"
            new = tmp_path / f"ak{run}.json"
            rep1 = _cli(["eval", str(SAMPLES / "toric_n2.json"), "--mode", "harmonic", "--alpha", "1,2",
                         "--grid", "0.1:0.9:3,-1:1:3,0.5", "--out", str(csv)], threads)
            rep2 = _cli(["transform", "--op", "iterate-ak", "--k", "3", "--out", str(new)], threads)
            rep1 = json.loads(rep1)
            rep1["arguments"].pop("out")
            rep1.pop("output")
            outs.append((csv.read_bytes(), new.read_bytes(), json.dumps(rep1), json.loads(rep2)["output_digest"]))
        assert outs[0] == outs[1]
        for path in sorted(SAMPLES.glob("*.json")):
            d = json.loads(path.read_text())
            if "group" in d:
                g, t = htk_io.target_from_dict(d)
                assert htk_io.target_to_dict(htk_io.target_from_dict(htk_io.target_to_dict(t))[1]) == \
                    htk_io.target_to_dict(t)
                continue
            try:
                a = htk_io.arrangement_from_dict(d)
            except htk_io.FormatError:
                assert path.stem == "duplicate_flat"
                continue
            text = htk_io.dumps(htk_io.arrangement_to_dict(a))
            b = htk_io.arrangement_from_dict(json.loads(text))
            assert b == a and htk_io.dumps(htk_io.arrangement_to_dict(b)) == text
