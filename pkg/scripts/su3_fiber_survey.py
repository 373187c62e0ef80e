"""Survey SU(3) fibre types: Case 2(c) sweeps, random targets and image points.

Prints label counts and writes one CSV row per target.
"""
import argparse
import csv
from collections import Counter

import numpy as np

from hypertoric.nonabelian_fibers import CotangentPoint, MomentTarget, classify_su3, mu, oracle_classify


def case2c(X: float, xi1: complex, root: int) -> MomentTarget:
    disc = X * X - 8 * abs(xi1) ** 2
    m = (X + (1 if root == 0 else -1) * np.sqrt(disc)) / 4
    return mu(CotangentPoint([np.sqrt(m), 0, 0], [0, xi1 / np.sqrt(m), 0]))


def gaussian(rng) -> MomentTarget:
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = 0.5 * (a - a.conj().T)
    a -= np.trace(a) / 3 * np.eye(3)
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return MomentTarget(a, b - np.trace(b) / 3 * np.eye(3))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--random", type=int, default=1000)
    p.add_argument("--image", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="cross-check every target with the oracle")
    p.add_argument("--out", default="su3_survey.csv")
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)

    rows = []
    for X in np.linspace(3, 100, 50):
        for root in (0, 1):
            rows.append(("case2c", f"X={X:.3g},root={root}", case2c(X, 0.9 + 0.4j, root)))
    rows += [("gaussian", str(i), gaussian(rng)) for i in range(args.random)]
    for i in range(args.image):
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        w = rng.normal(size=3) + 1j * rng.normal(size=3)
        rows.append(("image", str(i), mu(CotangentPoint(z, w))))

    counts: Counter = Counter()
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["family", "id", "label", "case", "moduli", "oracle"])
        for fam, ident, t in rows:
            fc = classify_su3(t)
            oc = oracle_classify(t).label if args.oracle else ""
            counts[(fam, fc.label)] += 1
            wr.writerow([fam, ident, fc.label, fc.case, ";".join(f"{m:.17g}" for m in fc.moduli), oc])
    for (fam, label), k in sorted(counts.items()):
        print(f"{fam:10s} {label:12s} {k}")


if __name__ == "__main__":
    main()
