"""Truncation needed by monomial families: N for a tail bound, or N for a divergence witness."""
import argparse

from hypertoric.arrangement import Arrangement, FamilyGenerator, convergence_check


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tail", type=float, default=1e-8)
    p.add_argument("--bound", type=float, default=10.0)
    args = p.parse_args()
    print("power  converges  N            tail_bound   partial_sum")
    for power in (1, 1.5, 2, 3, 4):
        g = FamilyGenerator((1,), (0, 0, 0), (1, 0, 0), 1, power)
        v = convergence_check(Arrangement(1, (), (g,)), args.tail, args.bound).families[0]
        tb = f"{v.tail_bound:.3e}" if v.tail_bound is not None else "-"
        print(f"{power:<5}  {str(v.converges):9s}  {v.N!s:<11}  {tb:11s}  {v.partial_sum:.6f}")


if __name__ == "__main__":
    main()
