"""Reduction of dismatching problems to flat disunification problems.

A dismatching problem is a basic problem in which every dissubsumption has
a ground side.  The reducer rewrites statements with the rules named in
:class:`RuleId` until none applies, branching over the don't-know choices.
Every problem it yields is flat and free of left-ground dissubsumptions;
the input is solvable iff one of them has a local solution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    TOP,
    Concept,
    Exists,
    Kind,
    Name,
    Statement,
    Substitution,
    atom_is_ground,
    is_flat_atom,
    is_ground,
    is_var_atom,
    single_var,
    size_of,
    substitution_class,
    subsumes,
)
from .errors import NotDismatching, VerificationFailed
from .local import verify_solution
from .normalize import FlatProblem, FreshNames, flatten_nonground_sides
from .parser import BasicProblem, render_statement, signature_of


class RuleId(enum.Enum):
    RIGHT_DECOMP = "RightDecomp"
    LEFT_DECOMP = "LeftDecomp"
    ATOMIC_DECOMP = "AtomicDecomp"
    FLATTEN_RIGHT_GROUND_DISSUB = "FlattenRightGroundDissub"
    FLATTEN_LEFT_GROUND_SUB = "FlattenLeftGroundSub"
    SOLVE_LEFT_GROUND_DISSUB = "SolveLeftGroundDissub"


def is_dismatching_problem(b: BasicProblem) -> bool:
    return all(is_ground(s.lhs) or is_ground(s.rhs) for s in b.dissubsumptions)


def pre_flatten_dismatching(b: BasicProblem) -> BasicProblem:
    """Flatten subsumptions and the non-ground sides of dissubsumptions."""
    if not is_dismatching_problem(b):
        raise NotDismatching("some dissubsumption has no ground side")
    stmts, defs, _ = flatten_nonground_sides(b)
    sig = b.signature.with_variables(defs)
    return BasicProblem(tuple(stmts), signature_of(stmts, sig), b.vars)


# --- rule matching ---------------------------------------------------------------


def _non_var_atom(c: Concept):
    if len(c.atoms) == 1 and not is_var_atom(c.atoms[0]):
        return c.atoms[0]
    return None


def matching_rules(s: Statement) -> list[RuleId]:
    """Every rule whose condition holds for ``s`` (at most one in practice)."""
    out = []
    lhs, rhs = s.lhs.atoms, s.rhs.atoms
    if s.is_dissub:
        if len(rhs) != 1:
            out.append(RuleId.RIGHT_DECOMP)
        d = _non_var_atom(s.rhs)
        if len(lhs) != 1 and d is not None:
            out.append(RuleId.LEFT_DECOMP)
        if len(lhs) == 1 and not is_var_atom(lhs[0]) and d is not None:
            out.append(RuleId.ATOMIC_DECOMP)
        if (
            single_var(s.lhs)
            and isinstance(d, Exists)
            and is_ground(d.arg)
            and not (len(d.arg.atoms) == 1 and isinstance(d.arg.atoms[0], Name))
        ):
            out.append(RuleId.FLATTEN_RIGHT_GROUND_DISSUB)
        if single_var(s.rhs) and all(atom_is_ground(a) for a in lhs):
            out.append(RuleId.SOLVE_LEFT_GROUND_DISSUB)
    else:
        if (
            single_var(s.rhs)
            and all(atom_is_ground(a) for a in lhs)
            and any(not is_flat_atom(a) for a in lhs)
        ):
            out.append(RuleId.FLATTEN_LEFT_GROUND_SUB)
    return out


def applicable_rule(s: Statement) -> RuleId | None:
    rules = matching_rules(s)
    if len(rules) > 1:
        raise AssertionError(f"several rules match {render_statement(s)}: {rules}")
    return rules[0] if rules else None


def measure(statements) -> int:
    """Sum of |lhs|·|rhs| over statements some rule applies to."""
    return sum(size_of(s) for s in statements if applicable_rule(s) is not None)


# --- rule actions ----------------------------------------------------------------

_FAIL = None  # marker for a failing alternative


def _dissub(lhs, rhs) -> Statement:
    return Statement(lhs if isinstance(lhs, Concept) else Concept((lhs,)),
                     rhs if isinstance(rhs, Concept) else Concept((rhs,)), Kind.DISSUB)


def _sub(lhs, rhs) -> Statement:
    return Statement(lhs if isinstance(lhs, Concept) else Concept((lhs,)),
                     rhs if isinstance(rhs, Concept) else Concept((rhs,)), Kind.SUB)


def _atomic(c, d) -> list[Statement] | None:
    """Atomic decomposition of ``c ⋢? d`` for non-variable atoms.

    Returns replacement statements, or None when the rule fails.
    """
    if atom_is_ground(c) and atom_is_ground(d):
        return None if subsumes(Concept((c,)), Concept((d,))) else []
    if isinstance(c, Name) or isinstance(d, Name) or c.role != d.role:
        return []
    return [_dissub(c.arg, d.arg)]


@dataclass
class DismatchState:
    gamma: dict[Statement, None]
    fresh: FreshNames
    defs: dict[str, Concept] = field(default_factory=dict)
    trace: list[tuple[RuleId, Statement]] = field(default_factory=list)
    path: tuple[int, ...] = ()

    def copy(self) -> "DismatchState":
        return DismatchState(dict(self.gamma), self.fresh.copy(), dict(self.defs), list(self.trace), self.path)

    def replace(self, s: Statement, new: list[Statement]) -> None:
        del self.gamma[s]
        for t in new:
            self.gamma.setdefault(t, None)

    def next_target(self) -> tuple[Statement, RuleId] | None:
        for s in self.gamma:
            r = applicable_rule(s)
            if r is not None:
                return s, r
        return None


def _alternatives(st: DismatchState, s: Statement, rule: RuleId, signature) -> list:
    """Each alternative is a function mutating a state copy, or _FAIL."""
    lhs, rhs = s.lhs.atoms, s.rhs.atoms

    if rule is RuleId.RIGHT_DECOMP:
        return [lambda n, d=d: n.replace(s, [_dissub(s.lhs, d)]) for d in rhs]

    if rule is RuleId.LEFT_DECOMP:
        return [lambda n: n.replace(s, [_dissub(c, s.rhs) for c in lhs])]

    if rule is RuleId.ATOMIC_DECOMP:
        new = _atomic(lhs[0], rhs[0])
        return [_FAIL] if new is None else [lambda n: n.replace(s, new)]

    if rule is RuleId.FLATTEN_RIGHT_GROUND_DISSUB:
        d = rhs[0]

        def act(n):
            xd = n.fresh()
            n.defs[xd.name] = d.arg
            n.replace(s, [_dissub(s.lhs, Exists(d.role, Concept((xd,)))), _sub(d.arg, xd)])

        return [act]

    if rule is RuleId.FLATTEN_LEFT_GROUND_SUB:
        def act(n):
            atoms, extra = [], []
            for c in lhs:
                if is_flat_atom(c):
                    atoms.append(c)
                else:
                    xd = n.fresh()
                    n.defs[xd.name] = c.arg
                    atoms.append(Exists(c.role, Concept((xd,))))
                    extra.append(_sub(c.arg, xd))
            atoms = sorted(set(atoms), key=lambda a: a.key)
            n.replace(s, extra + [_sub(Concept(atoms), s.rhs)])

        return [act]

    if rule is RuleId.SOLVE_LEFT_GROUND_DISSUB:
        x = rhs[0]
        out: list = []
        for a in sorted(signature.constants):
            ca = Name(a)
            if subsumes(s.lhs, Concept((ca,))):
                out.append(_FAIL)
            else:
                out.append(lambda n, ca=ca: n.replace(s, [_sub(x, ca)]))
        for r in sorted(signature.roles):
            def act(n, r=r):
                z = n.fresh()
                ez = Exists(r, Concept((z,)))
                new = [_sub(x, ez)]
                for c in lhs:
                    new.extend(_atomic(c, ez))
                n.replace(s, new)

            out.append(act)
        return out

    raise AssertionError(rule)


# --- search ----------------------------------------------------------------------


@dataclass
class DismatchStats:
    branches: int = 0
    successes: int = 0
    failures: int = 0
    applications: list[int] = field(default_factory=list)
    initial_measure: int = 0
    violations: list[tuple[int, int, RuleId]] = field(default_factory=list)


class DismatchReducer:
    """Depth-first enumeration of all successful runs.

    With ``check_measure`` the measure is recomputed after every rule
    application and any non-decrease is recorded in ``stats.violations``.
    """

    def __init__(self, b: BasicProblem, check_measure: bool = False):
        if not is_dismatching_problem(b):
            raise NotDismatching("some dissubsumption has no ground side")
        self.source = b
        self.problem = pre_flatten_dismatching(b)
        self.check_measure = check_measure
        self.stats = DismatchStats()

    def runs(self) -> Iterator[DismatchState]:
        p = self.problem
        sig = p.signature
        root = DismatchState(dict.fromkeys(p.statements), FreshNames.for_signature(sig))
        self.stats.initial_measure = measure(root.gamma) if self.check_measure else 0
        stack = [(root, self.stats.initial_measure)]
        while stack:
            st, c_before = stack.pop()
            target = st.next_target()
            if target is None:
                self.stats.successes += 1
                self.stats.applications.append(len(st.trace))
                yield st
                continue
            s, rule = target
            children = []
            for i, alt in enumerate(_alternatives(st, s, rule, sig)):
                if alt is _FAIL:
                    continue
                n = st.copy()
                alt(n)
                n.trace.append((rule, s))
                n.path = st.path + (i,)
                c_after = 0
                if self.check_measure:
                    c_after = measure(n.gamma)
                    if c_after >= c_before:
                        self.stats.violations.append((c_before, c_after, rule))
                children.append((n, c_after))
            self.stats.branches += max(0, len(children) - 1)
            if not children:
                self.stats.failures += 1
                self.stats.applications.append(len(st.trace))
            stack.extend(reversed(children))

    def reduced_problems(self) -> Iterator[FlatProblem]:
        seen = set()
        for st in self.runs():
            key = frozenset(st.gamma)
            if key in seen:
                continue
            seen.add(key)
            stmts = tuple(st.gamma)
            sig = self.problem.signature.with_variables(
                v for s in stmts for v in s.variables()
            )
            yield FlatProblem(stmts, signature_of(stmts, sig), self.source.vars, dict(st.defs), self.source)


def reduce_dismatching(b: BasicProblem) -> Iterator[FlatProblem]:
    return DismatchReducer(b).reduced_problems()


def source_variables(b: BasicProblem) -> tuple[str, ...]:
    names = list(b.vars)
    names.extend(sorted(b.variables() - set(names)))
    return tuple(names)


def complete_on(sigma, names) -> Substitution:
    """Restrict to ``names``, binding missing ones to top."""
    return Substitution({x: sigma[x] if x in sigma else TOP for x in names})


def solve_dismatching(
    b: BasicProblem,
    engine: str = "sat",
    max_solutions: int | None = None,
    dedup: bool = False,
    deadline: float | None = None,
    sat_cmd: str | None = None,
    on_reduced=None,
) -> Iterator[Substitution]:
    """Solutions of a dismatching problem, restricted to its variables.

    Each one is checked against ``b`` before it is yielded.
    """
    from .engines import solve_local

    names = source_variables(b)
    seen = set()
    found = 0
    for f in reduce_dismatching(b):
        if on_reduced is not None:
            on_reduced(f)
        for _, sigma in solve_local(f, engine, None, deadline=deadline, sat_cmd=sat_cmd):
            out = complete_on(sigma, names)
            if not verify_solution(b, out):
                raise VerificationFailed("reduced-problem solution does not solve the input")
            if dedup:
                key = substitution_class(out)
                if key in seen:
                    continue
                seen.add(key)
            yield out
            found += 1
            if max_solutions is not None and found >= max_solutions:
                return
