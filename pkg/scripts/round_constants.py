"""Worst decision rounds / n^2 per n on random Horn instances."""

import argparse
from collections import defaultdict

from dcsp.corpus import HORN, RandomSpec, horn_suite
from dcsp.distalgo import distributed_decide


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--m-max", type=int, default=14)
    args = ap.parse_args()
    worst = defaultdict(float)
    for inst in horn_suite(args.seed, args.count, RandomSpec(args.n_max, args.m_max)):
        res = distributed_decide(inst, language=HORN)
        worst[inst.n] = max(worst[inst.n], res.rounds / inst.n**2)
    print("n  max rounds/n^2")
    for n in sorted(worst):
        print(f"{n:<2} {worst[n]:.2f}")


if __name__ == "__main__":
    main()
