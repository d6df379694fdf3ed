"""Goal-oriented search for local solutions of flat disunification problems.

Deterministic (eager) rules run to a fixpoint; afterwards one unsolved
statement is picked and the search branches over the nondeterministic rules
that apply to it.  Branches are explored depth first.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    Atom,
    Concept,
    Exists,
    Kind,
    Name,
    Statement,
    Substitution,
    is_var_atom,
    single_var,
    substitution_class,
)
from .errors import SolverTimeout
from .local import Assignment, AtomUniverse, atom_universe, induced_substitution, is_acyclic
from .normalize import FlatProblem


class BranchFailed(Exception):
    """The current branch has no solution."""


def initially_solved(s: Statement) -> Name | None:
    """The variable an initially solved statement constrains, else None."""
    if s.is_sub:
        return single_var(s.rhs)
    if len(s.rhs.atoms) == 1 and not is_var_atom(s.rhs.atoms[0]):
        return single_var(s.lhs)
    return None


def _expansion(s: Statement, e: Atom) -> Statement:
    if s.is_sub:
        return Statement(s.lhs, Concept((e,)), Kind.SUB)
    return Statement(Concept((e,)), s.rhs, Kind.DISSUB)


def _atom_key(a):
    return a.key


@dataclass
class GoalState:
    universe: AtomUniverse
    gamma: dict[Statement, bool] = field(default_factory=dict)
    assignment: dict[str, frozenset] = field(default_factory=dict)
    trace: list[tuple[str, Statement]] = field(default_factory=list)
    steps: int = 0

    def copy(self) -> "GoalState":
        return GoalState(self.universe, dict(self.gamma), dict(self.assignment), list(self.trace), self.steps)

    def s_of(self, x: str) -> frozenset:
        return self.assignment.get(x, frozenset())

    def unsolved(self) -> list[Statement]:
        return [s for s, done in self.gamma.items() if not done]

    def as_assignment(self) -> Assignment:
        return Assignment(self.assignment)

    def add(self, s: Statement) -> None:
        """Add ``s`` unless present; initially solved statements are expanded."""
        if s in self.gamma:
            return
        x = initially_solved(s)
        self.gamma[s] = x is not None
        if x is not None:
            for e in sorted(self.s_of(x.name), key=_atom_key):
                self.add(_expansion(s, e))

    def extend(self, x: str, d: Atom) -> None:
        """Add ``d`` to S_x, failing on a cycle, then expand w.r.t. x."""
        new = self.s_of(x) | {d}
        trial = dict(self.assignment)
        trial[x] = new
        if not is_acyclic(Assignment(trial)):
            raise BranchFailed(f"assignment becomes cyclic at {x}")
        self.assignment = trial
        expand(self, x)

    def solve(self, s: Statement, rule: str) -> None:
        self.gamma[s] = True
        self.trace.append((rule, s))
        self.steps += 1


def expand(st: GoalState, x: str) -> GoalState:
    """Make Γ expanded w.r.t. ``x`` (mutates and returns ``st``)."""
    targets = st.s_of(x)
    if not targets:
        return st
    for s in list(st.gamma):
        v = initially_solved(s)
        if v is not None and v.name == x:
            for e in sorted(targets, key=_atom_key):
                st.add(_expansion(s, e))
    return st


def initial_state(f: FlatProblem, universe: AtomUniverse | None = None) -> GoalState:
    st = GoalState(universe or atom_universe(f))
    for s in f.statements:
        st.add(s)
    return st


# --- eager rules -----------------------------------------------------------------


def _eager_rule(st: GoalState, s: Statement) -> str | None:
    """Apply the first eager rule matching ``s``; return its name or None."""
    lhs = s.lhs.atoms
    if s.is_ground:
        if not s.holds():
            raise BranchFailed("ground statement is false")
        st.solve(s, "EagerGroundSolving")
        return "EagerGroundSolving"

    d = s.rhs.atoms[0] if len(s.rhs.atoms) == 1 else None
    if d is not None:
        for c in lhs:
            if c == d or (is_var_atom(c) and d in st.s_of(c.name)):
                if s.is_dissub:
                    raise BranchFailed("dissubsumption holds syntactically")
                st.solve(s, "EagerSolving")
                return "EagerSolving"

    if s.is_sub and d is not None:
        for i, c in enumerate(lhs):
            if is_var_atom(c):
                rest = set(lhs[:i] + lhs[i + 1:])
                if rest <= st.s_of(c.name):
                    st.extend(c.name, d)
                    st.solve(s, "EagerExtension")
                    return "EagerExtension"
        return None

    if s.is_sub:
        return None
    if not s.rhs.atoms:
        raise BranchFailed("nothing is strictly above top")
    if d is None or is_var_atom(d):
        return None
    if len(lhs) != 1:
        st.solve(s, "EagerLeftDecomposition")
        for c in lhs:
            st.add(Statement(Concept((c,)), s.rhs, Kind.DISSUB))
        return "EagerLeftDecomposition"
    c = lhs[0]
    if is_var_atom(c):
        return None
    # atomic decomposition
    if isinstance(c, Name) or isinstance(d, Name) or c.role != d.role:
        st.solve(s, "EagerAtomicDecomposition")
        return "EagerAtomicDecomposition"
    st.solve(s, "EagerAtomicDecomposition")
    st.add(Statement(c.arg, d.arg, Kind.DISSUB))
    return "EagerAtomicDecomposition"


def eager_step(st: GoalState) -> str | None:
    """Apply one eager rule to the first unsolved statement admitting one.

    Returns the rule name, or None when no eager rule applies.  Raises
    :class:`BranchFailed` when the rule fails.
    """
    for s in st.unsolved():
        rule = _eager_rule(st, s)
        if rule is not None:
            return rule
    return None


# --- nondeterministic rules ------------------------------------------------------


def nondet_branches(st: GoalState, s: Statement) -> list[GoalState]:
    """One successor per don't-know choice on ``s``; empty means failure."""
    out: list[GoalState] = []
    lhs = s.lhs.atoms

    def attempt(rule: str, action) -> None:
        nxt = st.copy()
        try:
            action(nxt)
        except BranchFailed:
            return
        nxt.solve(s, rule)
        out.append(nxt)

    if s.is_sub:
        d = s.rhs.atoms[0]
        if isinstance(d, Exists):
            for c in lhs:
                if isinstance(c, Exists) and c.role == d.role:
                    new = Statement(c.arg, d.arg, Kind.SUB)
                    attempt("Decomposition", lambda n, new=new: n.add(new))
        for c in lhs:
            if is_var_atom(c):
                attempt("Extension", lambda n, x=c.name: n.extend(x, d))
    else:
        x = single_var(s.rhs)
        if x is not None:
            for d in st.universe.at_nv:
                def local_ext(n, d=d):
                    n.extend(x.name, d)
                    n.add(Statement(s.lhs, Concept((d,)), Kind.DISSUB))
                attempt("LocalExtension", local_ext)
    return out


# --- driver ----------------------------------------------------------------------


def prepare_goal_input(f: FlatProblem) -> Iterator[FlatProblem]:
    """Give every dissubsumption a single right-hand atom by choosing one.

    A dissubsumption with right-hand side top admits no choice, so such
    problems yield nothing.
    """
    options = []
    for s in f.statements:
        if s.is_dissub and len(s.rhs.atoms) != 1:
            if not s.rhs.atoms:
                return
            options.append([Statement(s.lhs, Concept((d,)), Kind.DISSUB) for d in s.rhs.atoms])
        else:
            options.append([s])
    seen = set()
    for combo in itertools.product(*options):
        stmts = tuple(dict.fromkeys(combo))
        if stmts in seen:
            continue
        seen.add(stmts)
        yield FlatProblem(stmts, f.signature, f.vars, f.fresh_vars, f.origin)


def step_budget(f: FlatProblem, universe: AtomUniverse) -> int:
    """Upper bound on rule applications along one branch."""
    n_at, n_nv = len(universe.at), len(universe.at_nv)
    return len(f.statements) * (1 + n_nv) + 2 * n_at * n_at


@dataclass
class GoalStats:
    branches: int = 0
    max_steps: int = 0
    budget: int = 0


def solve_goal_oriented(
    f: FlatProblem,
    max_solutions: int | None = None,
    dedup: bool = False,
    deadline: float | None = None,
    stats: GoalStats | None = None,
    with_trace: bool = False,
) -> Iterator[tuple[Assignment, Substitution] | tuple[Assignment, Substitution, list]]:
    """Depth-first search over all runs; yields (S, σ_S) for every success.

    With ``with_trace`` each result carries the list of applied rules.
    """
    universe = atom_universe(f)
    names = tuple(sorted(set(universe.var_names()) | set(f.all_vars())))
    stats = stats if stats is not None else GoalStats()
    seen = set()
    found = 0
    for g in prepare_goal_input(f):
        budget = step_budget(g, universe)
        stats.budget = max(stats.budget, budget)
        stack = [initial_state(g, universe)]
        while stack:
            st = stack.pop()
            stats.branches += 1
            try:
                while eager_step(st) is not None:
                    if st.steps > budget:
                        raise RuntimeError("rule applications exceed the step budget")
            except BranchFailed:
                continue
            stats.max_steps = max(stats.max_steps, st.steps)
            if deadline is not None and time.monotonic() > deadline:
                raise SolverTimeout("goal-oriented search exceeded the time limit")
            pending = st.unsolved()
            if not pending:
                s_ = st.as_assignment()
                sigma = induced_substitution(s_, names)
                if dedup:
                    key = substitution_class(sigma)
                    if key in seen:
                        continue
                    seen.add(key)
                yield (s_, sigma, st.trace) if with_trace else (s_, sigma)
                found += 1
                if max_solutions is not None and found >= max_solutions:
                    return
                continue
            succ = nondet_branches(st, pending[0])
            for nxt in succ:
                if nxt.steps > budget:
                    raise RuntimeError("rule applications exceed the step budget")
            stack.extend(reversed(succ))
