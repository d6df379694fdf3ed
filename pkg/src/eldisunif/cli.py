"""Command-line interface.

Exit codes: 0 solved (or check passed), 1 provably unsolvable (or check
failed), 2 no local solution where general solvability is not decided,
3 error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engines import ENGINES
from .errors import ELError, SolverTimeout, VerificationFailed
from .local import verify_solution
from .normalize import enumerate_basic_problems, flatten, variablize_dissubsumptions
from .parser import (
    parse_problem,
    parse_substitution,
    render_problem,
    render_statement,
    render_substitution,
)
from .pipeline import LOCAL_ONLY, RunConfig, solve_problem

EXIT_OK, EXIT_UNSOLVABLE, EXIT_UNDECIDED, EXIT_ERROR = 0, 1, 2, 3


def _max_solutions(text: str) -> int | None:
    if text == "all":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'all'") from None
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'all'")
    return n


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors must not collide with the "undecided" exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgumentParser(
        prog="eldisunif",
        description="Unification, dismatching and local disunification in EL.",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--timeout-ms", type=int, default=None, help="wall-clock limit")
        p.add_argument("--trace", action="store_true", help="print rule logs / per-statement verdicts")

    p = sub.add_parser("solve", help="search for solutions")
    p.add_argument("problem", type=Path)
    p.add_argument("--engine", choices=ENGINES, default="sat")
    p.add_argument("--max-solutions", type=_max_solutions, default=1, metavar="N|all")
    p.add_argument("--dedup", action="store_true", help="drop solutions equivalent to earlier ones")
    p.add_argument("--no-verify", dest="verify", action="store_false")
    p.add_argument("--sat-cmd", default=None, help="external solver command; {} is the CNF path")
    p.add_argument("--show-reduced", action="store_true", help="print problems produced by the dismatching reduction")
    p.add_argument("--dimacs-out", type=Path, default=None, help="write the CNF of each SAT call here")
    p.add_argument("--force-local", action="store_true", help="skip dismatching routing")
    p.add_argument("--show-internal", action="store_true", help="also print bindings of generated variables")
    p.add_argument("--threads", type=int, default=1)
    common(p)

    p = sub.add_parser("check", help="check a substitution against a problem")
    p.add_argument("problem", type=Path)
    p.add_argument("substitution", type=Path)
    common(p)

    p = sub.add_parser("flatten", help="print the flat form of each basic problem")
    p.add_argument("problem", type=Path)

    p = sub.add_parser("encode", help="write the SAT encoding in DIMACS form")
    p.add_argument("problem", type=Path)
    p.add_argument("--dimacs-out", type=Path, default=None, help="CNF path; the variable map goes to PATH.varmap")
    return ap


def _numbered(path: Path, k: int, total_hint: bool) -> Path:
    if not total_hint:
        return path
    return path.with_name(f"{path.stem}.{k}{path.suffix}")


def _write_encoding(f, path: Path) -> None:
    from .sat.encoding import build_clauses

    cnf, m = build_clauses(variablize_dissubsumptions(f))
    path.write_text(cnf.to_dimacs())
    Path(str(path) + ".varmap").write_text(m.render())


def run_solve(args, out) -> int:
    g = parse_problem(args.problem.read_text())
    cfg = RunConfig(
        engine=args.engine,
        max_solutions=args.max_solutions,
        dedup=args.dedup,
        verify=args.verify,
        timeout_ms=args.timeout_ms,
        sat_cmd=args.sat_cmd,
        force_local=args.force_local,
        show_internal=args.show_internal,
        trace=args.trace,
        threads=args.threads,
    )
    counter = {"reduced": 0, "cnf": 0}

    def show_reduced(f):
        counter["reduced"] += 1
        out.write(f"# reduced problem {counter['reduced']}\n")
        out.write(render_problem(f.statements, f.all_vars()))

    def dump_cnf(f):
        counter["cnf"] += 1
        _write_encoding(f, _numbered(args.dimacs_out, counter["cnf"], counter["cnf"] > 1))

    report = solve_problem(
        g,
        cfg,
        on_reduced=show_reduced if args.show_reduced else None,
        on_local_problem=dump_cnf if args.dimacs_out is not None and cfg.engine == "sat" else None,
    )
    for i, found in enumerate(report.solutions, 1):
        label = " [LOCAL-ONLY]" if found.route == LOCAL_ONLY else ""
        out.write(f"# solution {i}{label}\n")
        out.write(render_substitution(found.substitution))
        if found.trace:
            for rule, s in found.trace:
                out.write(f"#   {rule}: {render_statement(s)}\n")
    code = report.exit_code
    if code == EXIT_OK:
        out.write(f"status: solved ({len(report.solutions)} shown)\n")
    elif code == EXIT_UNSOLVABLE:
        out.write("status: unsolvable\n")
    else:
        out.write("status: no local solution (general solvability not decided)\n")
    return code


def run_check(args, out) -> int:
    g = parse_problem(args.problem.read_text())
    s = parse_substitution(args.substitution.read_text(), g.signature)
    ok = verify_solution(g, s)
    if args.trace:
        b = g.as_basic()
        if b is not None:
            for st in b.statements:
                verdict = "ok" if verify_solution([st], s) else "FAILS"
                out.write(f"{verdict}: {render_statement(st)}\n")
        else:
            for leaf in g.leaves():
                verdict = "true" if verify_solution([leaf.statement], s) else "false"
                out.write(f"{verdict}: {render_statement(leaf.statement)}\n")
    out.write("status: solution\n" if ok else "status: not a solution\n")
    return EXIT_OK if ok else EXIT_UNSOLVABLE


def run_flatten(args, out) -> int:
    g = parse_problem(args.problem.read_text())
    basics = list(enumerate_basic_problems(g))
    for k, b in enumerate(basics, 1):
        if len(basics) > 1:
            out.write(f"# basic problem {k}\n")
        f = flatten(b)
        out.write(render_problem(f.statements, f.all_vars()))
    return EXIT_OK


def run_encode(args, out) -> int:
    from .sat.encoding import build_clauses

    g = parse_problem(args.problem.read_text())
    basics = list(enumerate_basic_problems(g))
    for k, b in enumerate(basics, 1):
        f = flatten(b)
        if args.dimacs_out is not None:
            _write_encoding(f, _numbered(args.dimacs_out, k, len(basics) > 1))
            continue
        cnf, m = build_clauses(variablize_dissubsumptions(f))
        if len(basics) > 1:
            out.write(f"c basic problem {k}\n")
        for line in m.render().splitlines():
            out.write(f"c {line}\n")
        out.write(cnf.to_dimacs())
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    handlers = {"solve": run_solve, "check": run_check, "flatten": run_flatten, "encode": run_encode}
    try:
        return handlers[args.verb](args, out)
    except SolverTimeout as e:
        print(f"error: timeout: {e}", file=sys.stderr)
    except VerificationFailed as e:
        print(f"internal error: {e}", file=sys.stderr)
    except (ELError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
