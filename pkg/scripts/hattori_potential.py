"""Hattori potential along a line, with the family truncation and tail bound per tolerance."""
import argparse
import csv
import time
from pathlib import Path

import numpy as np

from hypertoric.arrangement import convergence_check
from hypertoric.io import load_arrangement
from hypertoric.potential_metric import potential_values, slice

SAMPLE = Path(__file__).resolve().parent.parent / "samples" / "hattori.json"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--file", default=str(SAMPLE))
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--out", default="hattori_potential.csv")
    args = p.parse_args()
    a = load_arrangement(args.file)
    s = slice(a, np.zeros((3, a.dimension)), [1] + [0] * (a.dimension - 1))
    P = np.column_stack([np.linspace(-5, 30, args.points), np.full(args.points, 0.5), np.zeros(args.points)])

    print("tolerance  terms        tail_bound   max|dV|      seconds")
    prev = None
    for tol in (1e-4, 1e-5, 1e-6, 1e-7):
        t0 = time.perf_counter()
        terms = s.terms_for(P, tol)
        vals, tail = potential_values(s, P, tol, terms)
        dv = np.abs(vals - prev).max() if prev is not None else float("nan")
        print(f"{tol:9.0e}  {terms[0]:<11d}  {tail:.3e}    {dv:.3e}    {time.perf_counter() - t0:.2f}")
        prev = vals
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["qx", "qy", "qz", "V"])
        for q, v in zip(P, prev):
            wr.writerow([f"{c:.17g}" for c in q] + [f"{v:.17g}"])
    v = convergence_check(a).families[0]
    print(f"convergence: tail bound below 1e-8 from N = {v.N}")


if __name__ == "__main__":
    main()
