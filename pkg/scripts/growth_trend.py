"""Wall time of the distributed decision on random Horn instances as n grows."""

import argparse
import math
import random
import time

from dcsp.corpus import HORN, random_instance
from dcsp.distalgo import distributed_decide


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=4)
    ap.add_argument("--n-max", type=int, default=12)
    ap.add_argument("--per-n", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    xs, ys = [], []
    for n in range(args.n_min, args.n_max + 1):
        rng = random.Random(n)
        insts = [random_instance(rng, HORN, n, 3 * n // 2) for _ in range(args.per_n)]
        best = math.inf
        for _ in range(args.repeats):
            start = time.perf_counter()
            for inst in insts:
                distributed_decide(inst, language=HORN)
            best = min(best, time.perf_counter() - start)
        xs.append(math.log(n))
        ys.append(math.log(best))
        print(f"n={n:<3} {best:.3f}s")
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    slope = sum((a - mx) * (b - my) for a, b in zip(xs, ys)) / sum((a - mx) ** 2 for a in xs)
    print(f"log-log slope {slope:.2f}")


if __name__ == "__main__":
    main()
