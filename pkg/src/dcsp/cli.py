"""Command-line front end: ``dcsp <command> [flags]``.

Exit codes: 0 for SAT or success, 1 for UNSAT or a negative answer, 2 for
usage, parse and budget errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .algebra import (
    augmented_language,
    find_symmetric_polymorphism,
    has_symmetric_all_arities,
    indicator_problem,
    projection,
)
from .blp import build_blp, common_denominator, index_partitions, mwu_solve, repair, round_to_assignment, search_provider
from .core import DEFAULT_BUDGET, BudgetExceeded, DcspError, brute_force_solve, evaluate
from .corpus import HORN, RandomSpec, horn_suite
from .distalgo import distributed_decide, distributed_search
from .formats import format_assignment, read_assignment, read_file, read_language, write_instance
from .hardgen import generate_hard_pair, witness_solution_i2
from .refinement import refine_instance, same_degree_sequence

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    command: str
    verdict: str
    rounds: int | None = None
    max_message_bytes: int | None = None
    wall_time: float = 0.0
    checks: dict[str, bool] = field(default_factory=dict)
    version: str = __version__
    input_digest: str | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=str)

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.verdict}"]
        if self.rounds is not None:
            lines.append(f"  rounds: {self.rounds}")
        if self.max_message_bytes is not None:
            lines.append(f"  max message bytes: {self.max_message_bytes}")
        for name, ok in self.checks.items():
            lines.append(f"  check {name}: {'pass' if ok else 'FAIL'}")
        for key, value in self.details.items():
            lines.append(f"  {key}: {value}")
        lines.append(f"  wall time: {self.wall_time:.3f}s")
        return "\n".join(lines)


class UsageError(DcspError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def digest_files(*paths: str | None) -> str:
    h = hashlib.sha256()
    for p in paths:
        if p:
            h.update(Path(p).read_bytes())
    return h.hexdigest()


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="work budget for exhaustive searches")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--trace", metavar="PATH", help="write the message-passing trace as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcsp", description="Distributed CSP toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run the distributed decision (or search) algorithm")
    p.add_argument("--instance", required=True)
    p.add_argument("--search", action="store_true", help="also compute an assignment")
    p.add_argument("--gamma", help="language file (defaults to the instance's relations)")
    p.add_argument("--max-r", type=int, help="first check symmetric polymorphisms of arities 1..N")
    _common(p)

    p = sub.add_parser("refine", help="iterated-degree partition")
    p.add_argument("--instance", required=True)
    p.add_argument("--compare", help="second instance: compare degree sequences")
    _common(p)

    p = sub.add_parser("blp", help="MWU feasibility for the basic LP")
    p.add_argument("--instance", required=True)
    p.add_argument("--epsilon", type=Fraction, default=Fraction(1, 100))
    p.add_argument("--round", action="store_true", help="repair and round to an assignment")
    p.add_argument("--gamma", help="language used to find symmetric polymorphisms for rounding")
    p.add_argument("--max-arity", type=int, default=64, help="refuse to round with a common denominator above N")
    _common(p)

    p = sub.add_parser("algebra", help="polymorphism tools")
    p.add_argument("action", choices=["check-sym", "indicator"])
    p.add_argument("--gamma", required=True)
    p.add_argument("--max-r", type=int, default=3, help="check arities 1..max-r")
    p.add_argument("--r", type=int, default=2, help="indicator order")
    p.add_argument("--out", help="write the indicator instance here")
    _common(p)

    p = sub.add_parser("hardgen", help="build an indistinguishable UNSAT/SAT pair")
    p.add_argument("--gamma", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--n-hint", type=int, default=1)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--decide", action="store_true", help="also run the decision algorithm on both")
    _common(p)

    p = sub.add_parser("verify", help="check an assignment against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--assignment", required=True)
    _common(p)

    p = sub.add_parser("bench", help="distributed decision against brute force on random Horn instances")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--m-max", type=int, default=14)
    _common(p)
    return parser


def _write_trace(args, result) -> None:
    if args.trace:
        Path(args.trace).write_text(json.dumps(result.trace.to_json_obj(), sort_keys=True))


def _oracle(instance, budget: int):
    try:
        return brute_force_solve(instance, budget)
    except BudgetExceeded:
        return "skipped"


def cmd_solve(args) -> tuple[RunReport, int]:
    language, instance = read_file(args.instance)
    if args.gamma:
        language = read_language(args.gamma)
    report = RunReport("solve", "", input_digest=digest_files(args.instance, args.gamma))
    if args.max_r:
        # the decision verdict is only guaranteed for such languages
        report.checks[f"symmetric polymorphisms up to arity {args.max_r}"] = has_symmetric_all_arities(
            language, args.max_r, args.budget
        )
    if args.search:
        gamma_prime = augmented_language(language, args.budget)
        res = distributed_search(instance, gamma_prime, max_rounds=args.max_rounds)
        if res.assignment is not None:
            report.details["assignment"] = format_assignment(res.assignment).strip()
            report.checks["assignment satisfies"] = evaluate(instance, res.assignment)
    else:
        res = distributed_decide(instance, language=language, max_rounds=args.max_rounds)
    _write_trace(args, res)
    report.verdict = res.verdict
    report.rounds = res.rounds
    report.max_message_bytes = res.trace.max_message_bytes
    report.details["refinement rounds"] = res.refinement_rounds
    oracle = _oracle(instance, args.budget)
    if oracle != "skipped":
        report.checks["agrees with brute force"] = (oracle is not None) == (res.verdict == "sat")
    if res.verdict == "sat":
        return report, EXIT_OK
    if res.verdict in ("unsat", "fail"):
        return report, EXIT_NEGATIVE
    return report, EXIT_USAGE


def cmd_refine(args) -> tuple[RunReport, int]:
    _, instance = read_file(args.instance)
    p = refine_instance(instance)
    report = RunReport("refine", "ok", rounds=p.rounds_to_fixpoint, input_digest=digest_files(args.instance, args.compare))
    report.details["classes"] = p.num_classes
    report.details["variable classes"] = p.variable_classes()
    code = EXIT_OK
    if args.compare:
        _, other = read_file(args.compare)
        same = same_degree_sequence(instance, other)
        report.verdict = "same" if same else "different"
        code = EXIT_OK if same else EXIT_NEGATIVE
    return report, code


def cmd_blp(args) -> tuple[RunReport, int]:
    language, instance = read_file(args.instance)
    if args.gamma:
        language = read_language(args.gamma)
    prog = build_blp(instance)
    res = mwu_solve(prog, args.epsilon, max_rounds=args.max_rounds)
    report = RunReport("blp", "feasible" if res.feasible else "infeasible", rounds=res.rounds)
    report.input_digest = digest_files(args.instance, args.gamma)
    report.details["eta"] = str(res.eta)
    report.details["round cap"] = res.round_cap
    if not res.feasible:
        report.details["certificate"] = res.certificate is not None
        return report, EXIT_NEGATIVE
    report.checks["epsilon-feasible"] = prog.is_feasible(res.vector, args.epsilon)
    if args.round:
        exact = repair(prog, res.vector, index_partitions(prog), args.epsilon)
        if common_denominator(exact) > args.max_arity:
            raise BudgetExceeded(f"rounding needs arity {common_denominator(exact)} > --max-arity {args.max_arity}")
        nu = round_to_assignment(instance, exact, search_provider(language, args.budget))
        report.details["assignment"] = format_assignment(nu).strip()
        ok = evaluate(instance, nu)
        report.checks["rounded assignment satisfies"] = ok
        if not ok:
            return report, EXIT_NEGATIVE
    return report, EXIT_OK


def cmd_algebra(args) -> tuple[RunReport, int]:
    gamma = read_language(args.gamma)
    report = RunReport("algebra", "", input_digest=digest_files(args.gamma))
    if args.action == "check-sym":
        found = {}
        for r in range(1, args.max_r + 1):
            f = find_symmetric_polymorphism(gamma, r, args.budget)
            found[r] = None if f is None else list(f.table)
        report.details["symmetric polymorphisms"] = found
        ok = all(v is not None for v in found.values())
        report.verdict = f"symmetric up to arity {args.max_r}" if ok else "missing"
        return report, EXIT_OK if ok else EXIT_NEGATIVE
    inst = indicator_problem(gamma, args.r, args.budget)
    if args.out:
        write_instance(args.out, inst, gamma)
    report.verdict = "ok"
    report.details["variables"] = inst.n
    report.details["constraints"] = inst.m
    return report, EXIT_OK


def cmd_hardgen(args) -> tuple[RunReport, int]:
    gamma = read_language(args.gamma)
    pair = generate_hard_pair(gamma, args.r, args.n_hint, args.budget)
    prefix = Path(args.out_prefix)
    write_instance(f"{prefix}_i1.csp", pair.i1, pair.language)
    write_instance(f"{prefix}_i2.csp", pair.i2, pair.language)
    report = RunReport("hardgen", "ok", input_digest=digest_files(args.gamma))
    report.details.update(n=pair.n, variables=pair.i1.n, constraints=pair.i1.m)
    report.checks["same degree sequence"] = same_degree_sequence(pair.i1, pair.i2)
    report.checks["I2 witness satisfies"] = evaluate(pair.i2, witness_solution_i2(pair, projection(gamma.domain_size, args.r)))
    i1 = _oracle(pair.i1, args.budget)
    if i1 != "skipped":
        report.checks["I1 unsatisfiable"] = i1 is None
    if args.decide:
        v1 = distributed_decide(pair.i1, max_rounds=args.max_rounds).verdict
        v2 = distributed_decide(pair.i2, max_rounds=args.max_rounds).verdict
        report.details["verdicts"] = [v1, v2]
        report.checks["identical verdicts"] = v1 == v2
    report.details["files"] = [f"{prefix}_i1.csp", f"{prefix}_i2.csp"]
    Path(f"{prefix}_report.json").write_text(report.to_json())
    return report, EXIT_OK if all(report.checks.values()) else EXIT_NEGATIVE


def cmd_verify(args) -> tuple[RunReport, int]:
    _, instance = read_file(args.instance)
    a = read_assignment(args.assignment, instance.n)
    ok = evaluate(instance, a)
    report = RunReport("verify", "satisfies" if ok else "violates", input_digest=digest_files(args.instance, args.assignment))
    return report, EXIT_OK if ok else EXIT_NEGATIVE


def cmd_bench(args) -> tuple[RunReport, int]:
    suite = horn_suite(args.seed, args.count, RandomSpec(n_max=args.n_max, m_max=args.m_max))
    agree, worst = 0, 0.0
    max_rounds = 0
    for inst in suite:
        res = distributed_decide(inst, language=HORN, max_rounds=args.max_rounds)
        agree += (res.verdict == "sat") == (brute_force_solve(inst, args.budget) is not None)
        max_rounds = max(max_rounds, res.rounds)
        worst = max(worst, res.rounds / inst.n**2)
    report = RunReport("bench", f"{agree}/{len(suite)} agree", rounds=max_rounds)
    report.checks["all agree"] = agree == len(suite)
    report.details["max rounds / n^2"] = round(worst, 3)
    report.details["seed"] = args.seed
    return report, EXIT_OK if agree == len(suite) else EXIT_NEGATIVE


COMMANDS = {
    "solve": cmd_solve,
    "refine": cmd_refine,
    "blp": cmd_blp,
    "algebra": cmd_algebra,
    "hardgen": cmd_hardgen,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except (DcspError, OSError, ValueError) as exc:
        print(f"dcsp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.wall_time = time.perf_counter() - start
    print(report.to_json() if args.json else report.to_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
