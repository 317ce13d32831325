"""Build the NEQ pair, check degrees and satisfiability, and run the decision on both."""

import argparse
import time

from dcsp.algebra import projection
from dcsp.core import brute_force_solve, evaluate
from dcsp.corpus import NEQ_LANGUAGE
from dcsp.distalgo import distributed_decide
from dcsp.hardgen import generate_hard_pair, witness_solution_i2
from dcsp.refinement import same_degree_sequence


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--skip-decide", action="store_true")
    args = ap.parse_args()
    start = time.perf_counter()
    pair = generate_hard_pair(NEQ_LANGUAGE, args.r)
    print(f"n = {pair.n}: {pair.i1.n} variables, {pair.i1.m} / {pair.i2.m} constraints")
    print(f"same degree sequence: {same_degree_sequence(pair.i1, pair.i2)}")
    witness = witness_solution_i2(pair, projection(args.r, NEQ_LANGUAGE.domain_size, 0))
    print(f"projection witness satisfies I2: {evaluate(pair.i2, witness)}")
    print(f"I1 satisfiable: {brute_force_solve(pair.i1) is not None}")
    if not args.skip_decide:
        print(f"decision verdicts: {distributed_decide(pair.i1).verdict} / {distributed_decide(pair.i2).verdict}")
    print(f"{time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
