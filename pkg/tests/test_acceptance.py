"""Acceptance checks.  Each prints one ``CRITERION k: PASS/FAIL ...`` line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import functools
import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eldisunif.core import Concept, Exists, conj, dissubsumes, exists, substitution_class, substitutions_equivalent, subsumes  # noqa: E402
from eldisunif.dismatch import DismatchReducer, reduce_dismatching  # noqa: E402
from eldisunif.engines import has_local_solution, solve_local  # noqa: E402
from eldisunif.local import atom_universe, brute_force_local_solve, verify_solution  # noqa: E402
from eldisunif.normalize import variablize_dissubsumptions  # noqa: E402
from eldisunif.parser import parse_problem, parse_substitution  # noqa: E402
from eldisunif.pipeline import RunConfig, solve_problem  # noqa: E402
from eldisunif.sat import build_clauses, encode_solution_as_valuation, expected_clause_counts  # noqa: E402
from eldisunif.sat.encoding import CLAUSE_CLASSES  # noqa: E402

from problems import (  # noqa: E402
    INTRO_CONSTRAINT,
    INTRO_INTENDED,
    INTRO_NONSENSE,
    INTRO_TEXT,
    NONLOCAL_SOLUTION_TEXT,
    all_atoms_depth2,
    extend_to_fresh,
    nonlocal_flat,
    nonlocal_problem,
    oracle_subsumes,
    random_dismatching_problem,
    random_flat_problem,
)

ENGINES = ("brute", "rules", "sat")


@functools.lru_cache(maxsize=None)
def oracle_instances():
    """500 random flat problems with every brute-force local solution."""
    rng = random.Random(2024)
    out = []
    for _ in range(500):
        f = random_flat_problem(rng)
        out.append((f, [sigma for _, sigma in brute_force_local_solve(f)]))
    return tuple(out)


def criterion_1():
    f = nonlocal_flat()
    parts, ok = [], True
    for engine in ENGINES:
        t = time.perf_counter()
        found = has_local_solution(f, engine)
        dt = time.perf_counter() - t
        ok &= not found and dt < 1.0
        parts.append(f"{engine}: {'solution' if found else 'none'} in {dt:.3f}s")
    return ok, "; ".join(parts)


def criterion_2():
    b = nonlocal_problem().as_basic()
    target = parse_substitution(NONLOCAL_SOLUTION_TEXT, b.signature)
    t = time.perf_counter()
    reduced = matched = 0
    bad = 0
    for f in reduce_dismatching(b):
        reduced += 1
        for _, sigma in solve_local(f, "sat"):
            xy = sigma.restrict(("X", "Y"))
            if not verify_solution(b, xy):
                bad += 1
            elif substitutions_equivalent(xy, target):
                matched += 1
    dt = time.perf_counter() - t
    ok = matched > 0 and bad == 0 and dt < 5.0
    return ok, f"{reduced} reduced problems, {matched} matches of the expected solution, {bad} unverified, {dt:.2f}s"


def criterion_3():
    g = parse_problem(INTRO_TEXT)
    intended = parse_substitution(INTRO_INTENDED, g.signature)
    nonsense = parse_substitution(INTRO_NONSENSE, g.signature)
    cfg = RunConfig(engine="sat", max_solutions=None)
    before = [f.substitution for f in solve_problem(g, cfg).solutions]
    g2 = parse_problem(INTRO_TEXT + INTRO_CONSTRAINT)
    after = [f.substitution for f in solve_problem(g2, cfg).solutions]

    def has(sols, s):
        return any(substitutions_equivalent(t, s) for t in sols)

    checks = {
        "solvable": bool(before),
        "intended before": has(before, intended),
        "nonsense before": has(before, nonsense),
        "intended after": has(after, intended),
        "nonsense excluded": not has(after, nonsense),
    }
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(before)} local unifiers, {len(after)} with the dissubsumption"
    return not failed, detail + (f"; failed: {', '.join(failed)}" if failed else "")


def criterion_4():
    t = time.perf_counter()
    disagreements = solvable = 0
    for f, oracle in oracle_instances():
        verdicts = {e: has_local_solution(f, e) for e in ("rules", "sat")}
        verdicts["brute"] = bool(oracle)
        disagreements += len(set(verdicts.values())) > 1
        solvable += bool(oracle)
    dt = time.perf_counter() - t
    ok = disagreements == 0 and dt < 60.0
    return ok, f"500 problems ({solvable} solvable), {disagreements} disagreements, {dt:.1f}s"


def criterion_5():
    misses = total = 0
    for f, oracle in oracle_instances():
        if not oracle:
            continue
        found = {substitution_class(sigma.restrict(f.vars)) for _, sigma in solve_local(f, "sat")}
        for sigma in oracle:
            total += 1
            misses += substitution_class(sigma.restrict(f.vars)) not in found
    return misses == 0, f"{total} oracle solutions, {misses} missed by the SAT enumeration"


def criterion_6():
    rng = random.Random(606)
    violations = over = branches = applications = 0
    for _ in range(200):
        r = DismatchReducer(random_dismatching_problem(rng), check_measure=True)
        for _ in r.runs():
            pass
        violations += len(r.stats.violations)
        over += sum(n > r.stats.initial_measure for n in r.stats.applications)
        branches += len(r.stats.applications)
        applications += sum(r.stats.applications)
    ok = violations == 0 and over == 0
    return ok, f"200 problems, {branches} branches, {applications} rule applications, {violations} non-decreases, {over} over-long branches"


def criterion_7():
    rng = random.Random(707)
    bad_vars = bad_counts = bad_bound = 0
    for _ in range(50):
        f = variablize_dissubsumptions(random_flat_problem(rng))
        cnf, _ = build_clauses(f)
        u = atom_universe(f)
        n, nv, nn = len(u.at), len(u.vars), len(u.at_nv)
        bad_vars += cnf.num_vars != n * n + nv * nv + n * nv * nn
        expected = expected_clause_counts(f)
        bad_counts += any(cnf.class_counts.get(k, 0) != expected[k] for k in CLAUSE_CLASSES)
        bad_counts += len(cnf.clauses) != sum(expected.values())
        problem_part = sum(cnf.class_counts.get(k, 0) for k in ("Ia", "Ib", "Ic"))
        bad_bound += problem_part > len(f.statements) * (1 + nn)
        bad_bound += len(cnf.clauses) - problem_part > 8 * n ** 3
    ok = not (bad_vars or bad_counts or bad_bound)
    return ok, f"50 instances; variable count mismatches {bad_vars}, clause count mismatches {bad_counts}, cubic bound violations {bad_bound}"


def criterion_8():
    checked = unsatisfied = 0
    for f, oracle in oracle_instances():
        if not oracle:
            continue
        f2 = variablize_dissubsumptions(f)
        cnf, m = build_clauses(f2)
        for sigma in oracle:
            val = encode_solution_as_valuation(extend_to_fresh(sigma, f2), f2, m)
            unsatisfied += len(cnf.satisfied_by(val))
            checked += 1
    return checked > 0 and unsatisfied == 0, f"{checked} oracle solutions encoded, {unsatisfied} unsatisfied clauses"


def criterion_9():
    atoms = all_atoms_depth2()
    # ⊤, every atom, and every conjunction of two atoms
    terms = [conj()] + [conj(a) for a in atoms] + [conj(a, b) for a, b in itertools.combinations(atoms, 2)]
    rng = random.Random(909)
    violations = 0
    for c in terms:
        violations += not subsumes(c, c)
    for _ in range(20000):
        c, d = rng.choice(terms), rng.choice(terms)
        violations += not subsumes(conj(*c.atoms, *d.atoms), c)
        if subsumes(c, d):
            r = rng.choice(("r", "s"))
            violations += not subsumes(conj(exists(r, c)), conj(exists(r, d)))
    # transitivity, exhaustively over a pool: row c holds every d with c ⊑ d
    pool = terms[: len(atoms) + 1] + rng.sample(terms[len(atoms) + 1 :], 300)
    rows = [sum(1 << j for j, d in enumerate(pool) if subsumes(c, d)) for c in pool]
    for i in range(len(pool)):
        for j in range(len(pool)):
            if rows[i] >> j & 1:
                violations += rows[j] & ~rows[i] != 0
    for c, d in itertools.product(atoms, repeat=2):
        both = isinstance(c, Exists) and isinstance(d, Exists)
        cases = [
            not both and c != d,
            both and c.role != d.role,
            both and c.role == d.role and not oracle_subsumes(c.arg, d.arg),
        ]
        violations += sum(cases) > 1
        violations += dissubsumes(Concept((c,)), Concept((d,))) != any(cases)
    return violations == 0, f"{len(terms)} terms, transitivity over {len(pool)} terms, {len(atoms) ** 2} atom pairs, {violations} violations"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


def _line(k: int, ok: bool, detail: str) -> str:
    return f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(_line(k, ok, detail), flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
