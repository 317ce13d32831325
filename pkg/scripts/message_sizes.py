"""Largest refinement and consistency messages, normalised by m log2(n+m) and n log2(n+m)."""

import argparse
import math

from dcsp.corpus import full_corpus
from dcsp.distalgo import distributed_decide


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    c1 = c2 = 0.0
    corpus = full_corpus(args.seed)
    for inst in corpus:
        res = distributed_decide(inst)
        scale = math.log2(inst.n + inst.m)
        if res.max_refine_bytes:
            c1 = max(c1, res.max_refine_bytes / (inst.m * scale))
        if res.max_consistency_bytes:
            c2 = max(c2, res.max_consistency_bytes / (inst.n * scale))
    print(f"{len(corpus)} instances")
    print(f"refinement  c1 = {c1:.2f}")
    print(f"consistency c2 = {c2:.2f}")


if __name__ == "__main__":
    main()
