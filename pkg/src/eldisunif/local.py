"""Atoms of a flat problem, assignments, induced substitutions, and the
brute-force local oracle."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .core import (
    Atom,
    Concept,
    Exists,
    Name,
    Statement,
    Substitution,
    apply_substitution,
    subsumes,
)
from .errors import CyclicAssignment, SearchSpaceTooLarge, SolverTimeout
from .normalize import FlatProblem, check_flat
from .parser import And, BasicProblem, GeneralProblem, Leaf, Not, Or

DEFAULT_CAP_BITS = 24


@dataclass(frozen=True)
class AtomUniverse:
    at: tuple[Atom, ...]
    vars: tuple[Name, ...]
    at_nv: tuple[Atom, ...]

    def var_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)


def atom_universe(f: FlatProblem | Iterable[Statement]) -> AtomUniverse:
    """All flat atoms occurring as subterms, including names under ``∃r.``."""
    statements = f.statements if isinstance(f, FlatProblem) else tuple(f)
    check_flat(statements)
    atoms: set[Atom] = set()
    for s in statements:
        for side in (s.lhs, s.rhs):
            for a in side.atoms:
                atoms.add(a)
                if isinstance(a, Exists):
                    atoms.update(a.arg.atoms)
    at = tuple(sorted(atoms, key=lambda a: a.key))
    vars_ = tuple(a for a in at if isinstance(a, Name) and a.is_var)
    at_nv = tuple(a for a in at if not (isinstance(a, Name) and a.is_var))
    return AtomUniverse(at, vars_, at_nv)


class Assignment(Mapping):
    """Map from variable names to sets of non-variable flat atoms."""

    __slots__ = ("_sets",)

    def __init__(self, sets: Mapping[str, Iterable[Atom]] = ()):
        self._sets = {x: frozenset(atoms) for x, atoms in dict(sets).items()}

    def __getitem__(self, x: str) -> frozenset:
        return self._sets.get(x, frozenset())

    def __iter__(self):
        return iter(sorted(self._sets))

    def __len__(self):
        return len(self._sets)

    def __contains__(self, x):
        return x in self._sets

    def __eq__(self, other):
        if isinstance(other, Assignment):
            return {k: v for k, v in self._sets.items() if v} == {
                k: v for k, v in other._sets.items() if v
            }
        return NotImplemented

    def __hash__(self):
        return hash(frozenset((k, v) for k, v in self._sets.items() if v))

    def __repr__(self):
        from .parser import render_atom

        inner = ", ".join(
            f"{x}: {{{', '.join(sorted(render_atom(a) for a in self[x]))}}}" for x in self
        )
        return f"Assignment({{{inner}}})"

    def with_atom(self, x: str, atom: Atom) -> "Assignment":
        sets = dict(self._sets)
        sets[x] = sets.get(x, frozenset()) | {atom}
        return Assignment(sets)

    def dependencies(self) -> dict[str, set[str]]:
        """Direct edges of ``>_S``: X -> Y when Y occurs in an atom of S_X."""
        deps: dict[str, set[str]] = {}
        for x, atoms in self._sets.items():
            out = set()
            for a in atoms:
                if isinstance(a, Exists):
                    out.update(n.name for n in a.arg.atoms if isinstance(n, Name) and n.is_var)
            deps[x] = out
        return deps

    def greater(self) -> set[tuple[str, str]]:
        """The transitive closure ``>_S`` as a set of pairs."""
        deps = self.dependencies()
        pairs = set()
        for x in deps:
            stack, seen = list(deps[x]), set()
            while stack:
                y = stack.pop()
                if y in seen:
                    continue
                seen.add(y)
                pairs.add((x, y))
                stack.extend(deps.get(y, ()))
        return pairs


def is_acyclic(s: Assignment) -> bool:
    deps = s.dependencies()
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    for root in deps:
        if state.get(root):
            continue
        stack = [(root, iter(deps.get(root, ())))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                return False
            elif not state.get(nxt):
                state[nxt] = 1
                stack.append((nxt, iter(deps.get(nxt, ()))))
    return True


def induced_substitution(s: Assignment, variables: Iterable[str] = ()) -> Substitution:
    """``σ_S(X) = ⊓ {σ_S(D) | D ∈ S_X}``, computed bottom-up along ``>_S``.

    ``variables`` lists extra variables to bind (to top when unassigned).
    """
    memo: dict[str, Concept] = {}
    active: set[str] = set()

    def value(x: str) -> Concept:
        if x in memo:
            return memo[x]
        if x in active:
            raise CyclicAssignment(f"assignment is cyclic through {x!r}")
        active.add(x)
        atoms: list[Atom] = []
        for d in s[x]:
            if isinstance(d, Name):
                atoms.append(d)
            else:
                inner = d.arg.atoms[0] if len(d.arg.atoms) == 1 else None
                if isinstance(inner, Name) and inner.is_var:
                    atoms.append(Exists(d.role, value(inner.name)))
                else:
                    atoms.append(Exists(d.role, apply_substitution(_Lazy(value), d.arg)))
        active.discard(x)
        memo[x] = Concept(sorted(set(atoms), key=lambda a: a.key))
        return memo[x]

    names = set(s) | set(variables)
    return Substitution({x: value(x) for x in names})


class _Lazy(Mapping):
    def __init__(self, fn):
        self.fn = fn

    def __getitem__(self, k):
        return self.fn(k)

    def __iter__(self):
        return iter(())

    def __len__(self):
        return 0


# --- verification --------------------------------------------------------------


def statement_holds(s: Statement, sigma: Mapping[str, Concept]) -> bool:
    result = subsumes(apply_substitution(sigma, s.lhs), apply_substitution(sigma, s.rhs))
    return result if s.is_sub else not result


def _eval_formula(f, sigma) -> bool:
    if isinstance(f, Leaf):
        return subsumes(apply_substitution(sigma, f.lhs), apply_substitution(sigma, f.rhs))
    if isinstance(f, Not):
        return not _eval_formula(f.child, sigma)
    if isinstance(f, And):
        return all(_eval_formula(c, sigma) for c in f.children)
    if isinstance(f, Or):
        return any(_eval_formula(c, sigma) for c in f.children)
    raise TypeError(f"not a formula: {f!r}")


def verify_solution(
    p: GeneralProblem | BasicProblem | FlatProblem | Iterable[Statement],
    sigma: Mapping[str, Concept],
) -> bool:
    """Does ``sigma`` solve ``p``?  Raises UnboundVariable when a variable of
    ``p`` has no binding."""
    if isinstance(p, GeneralProblem):
        return _eval_formula(p.formula, sigma)
    statements = p.statements if isinstance(p, (BasicProblem, FlatProblem)) else p
    return all(statement_holds(s, sigma) for s in statements)


# --- brute-force oracle ----------------------------------------------------------


def brute_force_local_solve(
    f: FlatProblem,
    max_solutions: int | None = None,
    cap_bits: int = DEFAULT_CAP_BITS,
    deadline: float | None = None,
) -> Iterator[tuple[Assignment, Substitution]]:
    """Enumerate every acyclic assignment whose induced substitution solves f.

    Candidates are visited by number of chosen atoms, then lexicographically
    over (variable, atom) pairs, so small assignments come first.
    """
    u = atom_universe(f)
    names = u.var_names()
    bits = [(x, d) for x in names for d in u.at_nv]
    if len(bits) > cap_bits:
        raise SearchSpaceTooLarge(
            f"{len(names)} variables x {len(u.at_nv)} atoms = {len(bits)} bits exceeds cap {cap_bits}"
        )
    statements = _ordered_for_checking(f.statements)
    # the only dependency edges come from atoms ∃r.Y with Y a variable
    edges = []
    for x, d in bits:
        y = None
        if isinstance(d, Exists) and len(d.arg.atoms) == 1:
            a = d.arg.atoms[0]
            if isinstance(a, Name) and a.is_var:
                y = a.name
        edges.append(y)
    found = 0
    for k in range(len(bits) + 1):
        for combo in itertools.combinations(range(len(bits)), k):
            if deadline is not None and time.monotonic() > deadline:
                raise SolverTimeout("brute-force search exceeded the time limit")
            sets: dict[str, list] = {x: [] for x in names}
            deps: dict[str, list] = {}
            for i in combo:
                x, d = bits[i]
                sets[x].append(d)
                if edges[i] is not None:
                    deps.setdefault(x, []).append(edges[i])
            order = _topological(deps)
            if order is None:
                continue
            sigma = _fast_induced(sets, order)
            if all(statement_holds(st, sigma) for st in statements):
                yield Assignment(sets), sigma
                found += 1
                if max_solutions is not None and found >= max_solutions:
                    return


def _topological(deps: dict[str, list]) -> list[str] | None:
    """Variables with outgoing edges, dependencies first; None on a cycle."""
    if not deps:
        return []
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(x: str) -> bool:
        s = state.get(x)
        if s == 2:
            return True
        if s == 1:
            return False
        state[x] = 1
        for y in deps.get(x, ()):
            if not visit(y):
                return False
        state[x] = 2
        order.append(x)
        return True

    for x in deps:
        if not visit(x):
            return None
    return order


def _fast_induced(sets: dict[str, list], order: list[str]) -> Substitution:
    values: dict[str, Concept] = {}

    def value_of(x: str) -> Concept:
        atoms = set()
        for d in sets[x]:
            if isinstance(d, Exists):
                a = d.arg.atoms[0] if len(d.arg.atoms) == 1 else None
                if isinstance(a, Name) and a.is_var:
                    d = Exists(d.role, values[a.name] if a.name in values else value_of(a.name))
            atoms.add(d)
        return Concept(sorted(atoms, key=lambda a: a.key))

    for x in order:
        values[x] = value_of(x)
    for x in sets:
        if x not in values:
            values[x] = value_of(x)
    return Substitution.trusted(values)


def _ordered_for_checking(statements) -> list[Statement]:
    # cheap statements first so most candidates are rejected early
    return sorted(statements, key=lambda s: len(s.variables()))
