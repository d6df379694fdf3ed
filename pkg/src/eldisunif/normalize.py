"""From general problems to basic ones, and from basic ones to flat ones."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .core import (
    Concept,
    Exists,
    Kind,
    Name,
    Signature,
    Statement,
    is_flat_atom,
    single_var,
)
from .errors import NotFlat
from .parser import (
    FRESH_PREFIX,
    And,
    BasicProblem,
    Formula,
    GeneralProblem,
    Leaf,
    Not,
    signature_of,
)


@dataclass(frozen=True)
class FlatProblem:
    """A set of flat statements, with the fresh variables it introduced.

    ``vars`` are the variables of the source problem; solutions are usually
    reported restricted to them.
    """

    statements: tuple[Statement, ...]
    signature: Signature
    vars: tuple[str, ...] = ()
    fresh_vars: Mapping[str, Concept] = field(default_factory=dict)
    origin: BasicProblem | None = None

    def __post_init__(self):
        check_flat(self.statements)

    @classmethod
    def build(cls, statements: Iterable[Statement], signature: Signature | None = None, **kw):
        stmts = tuple(dict.fromkeys(statements))
        return cls(stmts, signature_of(stmts, signature), **kw)

    @property
    def subsumptions(self) -> list[Statement]:
        return [s for s in self.statements if s.is_sub]

    @property
    def dissubsumptions(self) -> list[Statement]:
        return [s for s in self.statements if s.is_dissub]

    def variables(self) -> set[str]:
        out: set[str] = set()
        for s in self.statements:
            out |= s.variables()
        return out

    def all_vars(self) -> tuple[str, ...]:
        """Declared variables followed by every other variable occurring."""
        seen = list(self.vars)
        seen.extend(sorted(self.variables() - set(seen)))
        return tuple(seen)


def is_flat_statement(s: Statement) -> bool:
    if not all(is_flat_atom(a) for a in s.lhs.atoms):
        return False
    if not all(is_flat_atom(a) for a in s.rhs.atoms):
        return False
    return s.is_dissub or len(s.rhs.atoms) == 1


def check_flat(statements: Iterable[Statement]) -> None:
    for s in statements:
        if not is_flat_statement(s):
            from .parser import render_statement

            raise NotFlat(f"statement is not flat: {render_statement(s)}")


class FreshNames:
    """Generates ``_v1, _v2, ...`` skipping names already in use."""

    def __init__(self, taken: Iterable[str] = (), start: int = 1):
        self.taken = set(taken)
        self.counter = start - 1

    @classmethod
    def for_signature(cls, sig: Signature) -> "FreshNames":
        return cls(sig.constants | sig.variables | sig.roles)

    def __call__(self) -> Name:
        while True:
            self.counter += 1
            name = f"{FRESH_PREFIX}{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return Name(name, True)

    def copy(self) -> "FreshNames":
        other = FreshNames(self.taken)
        other.counter = self.counter
        return other


# --- general -> basic ------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    index: int


def propositional_abstraction(g: GeneralProblem) -> tuple[Formula, dict[int, Leaf]]:
    """Replace each distinct leaf by a literal ``Lit(i)`` (numbered from 1)."""
    index: dict[Leaf, int] = {}

    def walk(f):
        if isinstance(f, Leaf):
            if f not in index:
                index[f] = len(index) + 1
            return Lit(index[f])
        if isinstance(f, Not):
            return Not(walk(f.child))
        return type(f)(tuple(walk(c) for c in f.children))

    skeleton = walk(g.formula)
    return skeleton, {i: leaf for leaf, i in index.items()}


def evaluate(skeleton, valuation: Mapping[int, bool]) -> bool | None:
    """Kleene three-valued evaluation; unassigned literals are unknown."""
    if isinstance(skeleton, Lit):
        return valuation.get(skeleton.index)
    if isinstance(skeleton, Not):
        v = evaluate(skeleton.child, valuation)
        return None if v is None else not v
    values = [evaluate(c, valuation) for c in skeleton.children]
    if isinstance(skeleton, And):
        if any(v is False for v in values):
            return False
        return True if all(v is True for v in values) else None
    if any(v is True for v in values):
        return True
    return False if all(v is False for v in values) else None


def enumerate_basic_problems(g: GeneralProblem) -> Iterator[BasicProblem]:
    """One basic problem per satisfying valuation of the propositional skeleton.

    Valuations are explored in lexicographic literal order, true before
    false, pruning partial valuations that already falsify the skeleton.
    """
    skeleton, leaves = propositional_abstraction(g)
    k = len(leaves)
    valuation: dict[int, bool] = {}

    def search(i: int):
        v = evaluate(skeleton, valuation)
        if v is False:
            return
        if i > k:
            stmts = [
                Statement(leaves[j].lhs, leaves[j].rhs, Kind.SUB if valuation[j] else Kind.DISSUB)
                for j in range(1, k + 1)
            ]
            yield BasicProblem.build(stmts, g.signature, g.vars)
            return
        for value in (True, False):
            valuation[i] = value
            yield from search(i + 1)
        del valuation[i]

    yield from search(1)


# --- flattening ------------------------------------------------------------------


class _Flattener:
    def __init__(self, signature: Signature, fresh: FreshNames | None = None):
        self.fresh = fresh or FreshNames.for_signature(signature)
        self.cache: dict[Concept, Name] = {}
        self.defs: dict[str, Concept] = {}
        self.out: dict[Statement, None] = {}
        self.queue: deque[Statement] = deque()

    def abbreviate(self, c: Concept) -> Name:
        v = self.cache.get(c)
        if v is None:
            v = self.fresh()
            self.cache[c] = v
            self.defs[v.name] = c
            vc = Concept((v,))
            self.queue.append(Statement(c, vc, Kind.SUB))
            self.queue.append(Statement(vc, c, Kind.SUB))
        return v

    def flat_atom(self, a):
        if is_flat_atom(a):
            return a
        return Exists(a.role, Concept((self.abbreviate(a.arg),)))

    def flat_term(self, c: Concept) -> Concept:
        if all(is_flat_atom(a) for a in c.atoms):
            return c
        atoms = {self.flat_atom(a) for a in c.atoms}
        return Concept(sorted(atoms, key=lambda a: a.key))

    def emit(self, s: Statement) -> None:
        self.out.setdefault(s, None)

    def statement(self, s: Statement, sides: str = "both") -> None:
        """Flatten ``s``.  ``sides`` restricts flattening of dissubsumptions to
        their non-ground side ('nonground') for dismatching problems."""
        if s.is_sub:
            lhs = self.flat_term(s.lhs)
            for d in s.rhs.atoms:
                self.emit(Statement(lhs, Concept((self.flat_atom(d),)), Kind.SUB))
        elif sides == "nonground":
            from .core import is_ground

            lhs = s.lhs if is_ground(s.lhs) else self.flat_term(s.lhs)
            rhs = s.rhs if is_ground(s.rhs) else self.flat_term(s.rhs)
            self.emit(Statement(lhs, rhs, Kind.DISSUB))
        else:
            self.emit(Statement(self.flat_term(s.lhs), self.flat_term(s.rhs), Kind.DISSUB))

    def run(self, statements: Iterable[Statement], sides: str = "both") -> list[Statement]:
        self.queue.extend(statements)
        while self.queue:
            s = self.queue.popleft()
            self.statement(s, sides if s.is_dissub else "both")
        return list(self.out)


def flatten(b: BasicProblem) -> FlatProblem:
    """Abbreviate non-flat existential arguments by fresh variables and split
    conjunctive right-hand sides of subsumptions.

    Identical abbreviated subterms share a variable.  A subsumption with
    right-hand side top disappears.
    """
    fl = _Flattener(b.signature)
    stmts = fl.run(b.statements)
    sig = b.signature.with_variables(fl.defs)
    return FlatProblem(tuple(stmts), signature_of(stmts, sig), b.vars, dict(fl.defs), b)


def flatten_nonground_sides(b: BasicProblem) -> tuple[list[Statement], dict[str, Concept], FreshNames]:
    """Like :func:`flatten` but leaves ground sides of dissubsumptions alone."""
    fl = _Flattener(b.signature)
    stmts = fl.run(b.statements, sides="nonground")
    return stmts, dict(fl.defs), fl.fresh


def variablize_dissubsumptions(f: FlatProblem) -> FlatProblem:
    """Rewrite every dissubsumption to the shape ``X ⋢? Y``.

    A side that is not a single variable is replaced by a fresh variable
    ``v`` together with flat subsumptions expressing ``v ≡? side``.  For
    side top only ``⊤ ⊑? v`` is added.
    """
    if all(single_var(s.lhs) and single_var(s.rhs) for s in f.dissubsumptions):
        return f
    fresh = FreshNames.for_signature(f.signature)
    cache: dict[Concept, Name] = {}
    defs = dict(f.fresh_vars)
    out: dict[Statement, None] = {}

    def side_var(side: Concept) -> Concept:
        if single_var(side):
            return side
        v = cache.get(side)
        if v is None:
            v = fresh()
            cache[side] = v
            defs[v.name] = side
            vc = Concept((v,))
            for a in side.atoms:
                out.setdefault(Statement(vc, Concept((a,)), Kind.SUB), None)
            out.setdefault(Statement(side, vc, Kind.SUB), None)
        return Concept((v,))

    for s in f.statements:
        if s.is_dissub:
            lhs, rhs = side_var(s.lhs), side_var(s.rhs)
            out.setdefault(Statement(lhs, rhs, Kind.DISSUB), None)
        else:
            out.setdefault(s, None)
    stmts = tuple(out)
    sig = f.signature.with_variables(v.name for v in cache.values())
    return FlatProblem(stmts, signature_of(stmts, sig), f.vars, defs, f.origin)


def as_flat_problem(b: BasicProblem) -> FlatProblem:
    """Wrap an already-flat basic problem without renaming anything."""
    return FlatProblem(b.statements, b.signature, b.vars, {}, b)

