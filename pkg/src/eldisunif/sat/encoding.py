"""Propositional encoding of local disunification and model decoding.

Variables: ``[C⊑D]`` for atoms C, D; ``[X>Y]`` for variables X, Y; and
auxiliary ``p(C,X,D)`` saying "D is an atom of X's value that C is not
below".  Clauses are grouped in the classes used by :data:`CLAUSE_CLASSES`.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from ..core import Atom, Concept, Exists, Name, Substitution, apply_substitution, single_var, subsumes
from ..errors import InternalEncodingError, NotASolution, NotVariablized
from ..local import (
    Assignment,
    AtomUniverse,
    atom_universe,
    induced_substitution,
    is_acyclic,
    verify_solution,
)
from ..normalize import FlatProblem
from ..parser import render_atom
from .dimacs import emit_dimacs
from .solver import CDCLSolver, run_external_solver

CLAUSE_CLASSES = (
    "Ia", "Ib", "Ic", "IIa", "IIb", "IIc", "IId", "IIe", "III", "IV", "Va", "Vb", "Vc",
)


@dataclass
class SatVarMap:
    """Numbering of the propositional variables.

    Subsumption variables come first, then order variables, then the
    auxiliary ones, each block contiguous.
    """

    universe: AtomUniverse
    sub: dict[tuple[Atom, Atom], int] = field(default_factory=dict)
    gt: dict[tuple[str, str], int] = field(default_factory=dict)
    p: dict[tuple[Atom, str, Atom], int] = field(default_factory=dict)

    @classmethod
    def build(cls, u: AtomUniverse) -> "SatVarMap":
        m = cls(u)
        n = 0
        for c in u.at:
            for d in u.at:
                n += 1
                m.sub[(c, d)] = n
        names = u.var_names()
        for x in names:
            for y in names:
                n += 1
                m.gt[(x, y)] = n
        for c in u.at:
            for x in names:
                for d in u.at_nv:
                    n += 1
                    m.p[(c, x, d)] = n
        return m

    @property
    def num_vars(self) -> int:
        return len(self.sub) + len(self.gt) + len(self.p)

    def describe(self) -> dict[int, str]:
        out: dict[int, str] = {}
        for (c, d), i in self.sub.items():
            out[i] = f"SUB {render_atom(c)} | {render_atom(d)}"
        for (x, y), i in self.gt.items():
            out[i] = f"GT {x} | {y}"
        for (c, x, d), i in self.p.items():
            out[i] = f"P {render_atom(c)} | {x} | {render_atom(d)}"
        return out

    def render(self) -> str:
        desc = self.describe()
        return "".join(f"{i} {desc[i]}\n" for i in sorted(desc))


@dataclass
class CnfInstance:
    num_vars: int
    clauses: list[tuple[int, ...]]
    class_counts: Counter = field(default_factory=Counter)

    def to_dimacs(self) -> str:
        return emit_dimacs(self.num_vars, self.clauses)

    def satisfied_by(self, valuation) -> list[int]:
        """Indices of clauses the valuation violates (empty when satisfied)."""
        bad = []
        for i, c in enumerate(self.clauses):
            if not any(valuation[abs(l)] == (l > 0) for l in c):
                bad.append(i)
        return bad


def _check_variablized(f: FlatProblem) -> None:
    for s in f.dissubsumptions:
        if not (single_var(s.lhs) and single_var(s.rhs)):
            from ..parser import render_statement

            raise NotVariablized(
                f"dissubsumption must relate two variables: {render_statement(s)}"
            )


def build_clauses(f: FlatProblem) -> tuple[CnfInstance, SatVarMap]:
    _check_variablized(f)
    u = atom_universe(f)
    m = SatVarMap.build(u)
    S, GT, P = m.sub, m.gt, m.p
    clauses: list[tuple[int, ...]] = []
    counts: Counter = Counter()

    def emit(cls: str, *lits: int) -> None:
        clauses.append(tuple(lits))
        counts[cls] += 1

    names = u.var_names()
    consts = [a for a in u.at_nv if isinstance(a, Name)]
    exs = [a for a in u.at_nv if isinstance(a, Exists)]

    # I: the problem itself
    for s in f.subsumptions:
        d = s.rhs.atoms[0]
        lhs = s.lhs.atoms
        if isinstance(d, Name) and d.is_var:
            for e in u.at_nv:
                emit("Ib", -S[(d, e)], *(S[(c, e)] for c in lhs))
        else:
            emit("Ia", *(S[(c, d)] for c in lhs))
    for s in f.dissubsumptions:
        emit("Ic", -S[(s.lhs.atoms[0], s.rhs.atoms[0])])

    # II: subsumption between non-variable atoms
    for a in consts:
        emit("IIa", S[(a, a)])
    for a in consts:
        for b in consts:
            if a != b:
                emit("IIb", -S[(a, b)])
    for e1 in exs:
        for e2 in exs:
            if e1.role != e2.role:
                emit("IIc", -S[(e1, e2)])
    for a in consts:
        for e in exs:
            emit("IId", -S[(a, e)])
            emit("IId", -S[(e, a)])
    for e1 in exs:
        for e2 in exs:
            if e1.role == e2.role:
                a, b = e1.arg.atoms[0], e2.arg.atoms[0]
                emit("IIe", -S[(e1, e2)], S[(a, b)])
                emit("IIe", -S[(a, b)], S[(e1, e2)])

    # III: transitivity
    for c1 in u.at:
        for c2 in u.at:
            s12 = S[(c1, c2)]
            for c3 in u.at:
                emit("III", -s12, -S[(c2, c3)], S[(c1, c3)])

    # IV: C ⋢ X needs a witness atom of X
    for c in u.at:
        for xn in u.vars:
            x = xn.name
            emit("IV", S[(c, xn)], *(P[(c, x, d)] for d in u.at_nv))
            for d in u.at_nv:
                emit("IV", -P[(c, x, d)], S[(xn, d)])
                emit("IV", -P[(c, x, d)], -S[(c, d)])

    # V: the order on variables
    for x in names:
        emit("Va", -GT[(x, x)])
    for x in names:
        for y in names:
            for z in names:
                emit("Vb", -GT[(x, y)], -GT[(y, z)], GT[(x, z)])
    succ_vars = [e for e in u.at if isinstance(e, Exists) and single_var(e.arg)]
    for xn in u.vars:
        for e in succ_vars:
            emit("Vc", -S[(xn, e)], GT[(xn.name, e.arg.atoms[0].name)])

    return CnfInstance(m.num_vars, clauses, counts), m


def expected_clause_counts(f: FlatProblem) -> dict[str, int]:
    """Closed-form size of each clause class, computed from the index sets
    alone (no clause is generated)."""
    u = atom_universe(f)
    n_at, n_var, n_nv = len(u.at), len(u.vars), len(u.at_nv)
    n_c = sum(1 for a in u.at_nv if isinstance(a, Name))
    roles = Counter(a.role for a in u.at_nv if isinstance(a, Exists))
    n_ex = sum(roles.values())
    same_role_pairs = sum(k * k for k in roles.values())
    var_rhs = sum(1 for s in f.subsumptions if single_var(s.rhs))
    n_sub = len(f.subsumptions)
    succ = sum(1 for a in u.at if isinstance(a, Exists) and single_var(a.arg))
    return {
        "Ia": n_sub - var_rhs,
        "Ib": var_rhs * n_nv,
        "Ic": len(f.dissubsumptions),
        "IIa": n_c,
        "IIb": n_c * (n_c - 1),
        "IIc": n_ex * n_ex - same_role_pairs,
        "IId": 2 * n_c * n_ex,
        "IIe": 2 * same_role_pairs,
        "III": n_at ** 3,
        "IV": n_at * n_var * (1 + 2 * n_nv),
        "Va": n_var,
        "Vb": n_var ** 3,
        "Vc": n_var * succ,
    }


def expected_num_vars(f: FlatProblem) -> int:
    u = atom_universe(f)
    return len(u.at) ** 2 + len(u.vars) ** 2 + len(u.at) * len(u.vars) * len(u.at_nv)


# --- decoding ------------------------------------------------------------------


def decode(valuation, m: SatVarMap) -> tuple[Assignment, Substitution]:
    u = m.universe
    sets = {
        x.name: {d for d in u.at_nv if valuation[m.sub[(x, d)]]} for x in u.vars
    }
    s = Assignment(sets)
    if not is_acyclic(s):
        raise InternalEncodingError("decoded assignment is cyclic")
    return s, induced_substitution(s, u.var_names())


def _successors(c: Concept) -> Iterator[Concept]:
    """Arguments reachable through one or more top-level existentials."""
    stack = [a.arg for a in c.atoms if isinstance(a, Exists)]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(a.arg for a in t.atoms if isinstance(a, Exists))


def greater_than(sigma: Mapping[str, Concept], x: str, y: str) -> bool:
    """``σ(x) ⊑ ∃r1.…∃rn.σ(y)`` for some roles, n ≥ 1.

    By structural subsumption this holds iff some term reached from σ(x) by
    following top-level existentials is subsumed by σ(y).
    """
    target = sigma[y]
    return any(subsumes(t, target) for t in _successors(sigma[x]))


def encode_solution_as_valuation(
    sigma: Mapping[str, Concept], f: FlatProblem, m: SatVarMap
) -> list[bool]:
    u = m.universe
    if not verify_solution(f, sigma):
        raise NotASolution("substitution does not solve the problem")
    val = [False] * (m.num_vars + 1)
    image = {a: apply_substitution(sigma, a) for a in u.at}
    for (c, d), i in m.sub.items():
        val[i] = subsumes(image[c], image[d])
    for (c, x, e), i in m.p.items():
        xn = Name(x, True)
        val[i] = subsumes(image[xn], image[e]) and not subsumes(image[c], image[e])
    for (x, y), i in m.gt.items():
        val[i] = greater_than(sigma, x, y)
    return val


# --- enumeration ---------------------------------------------------------------


def enumerate_models(
    f: FlatProblem,
    max_solutions: int | None = None,
    deadline: float | None = None,
    sat_cmd: str | None = None,
) -> Iterator[tuple[Assignment, Substitution]]:
    """All local solutions of a variablized flat problem, one per distinct
    assignment, by blocking each decoded assignment pattern."""
    cnf, m = build_clauses(f)
    u = m.universe
    projection = [m.sub[(x, d)] for x in u.vars for d in u.at_nv]
    found = 0
    if sat_cmd is None:
        solver = CDCLSolver(cnf.num_vars)
        for c in cnf.clauses:
            if not solver.add_clause(c):
                return
        while solver.solve(deadline):
            model = solver.model()
            yield decode(model, m)
            found += 1
            if max_solutions is not None and found >= max_solutions:
                return
            if not projection or not solver.add_clause(
                [-v if model[v] else v for v in projection]
            ):
                return
    else:
        clauses = list(cnf.clauses)
        while True:
            if deadline is not None and time.monotonic() > deadline:
                from ..errors import SolverTimeout

                raise SolverTimeout("SAT enumeration exceeded the time limit")
            res = run_external_solver(sat_cmd, emit_dimacs(cnf.num_vars, clauses), cnf.num_vars, deadline)
            if not res.satisfiable:
                return
            yield decode(res.model, m)
            found += 1
            if max_solutions is not None and found >= max_solutions:
                return
            if not projection:
                return
            clauses.append(tuple(-v if res.model[v] else v for v in projection))


def sat_solve_local(
    f: FlatProblem, deadline: float | None = None, sat_cmd: str | None = None
) -> tuple[Assignment, Substitution] | None:
    for pair in enumerate_models(f, 1, deadline, sat_cmd):
        return pair
    return None
