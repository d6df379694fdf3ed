"""EL concept terms, substitutions and structural (dis)subsumption.

Terms are immutable and hashable.  A :class:`Concept` is a conjunction of
atoms; the empty conjunction is top.  Values built through :func:`conj`,
:meth:`Concept.of` or :func:`canonicalize` are canonical: atoms are sorted,
duplicate-free, and canonical all the way down, so syntactic equality is a
plain ``==``.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .errors import DomainMismatch, UnboundVariable


class Name:
    """A concept name, either a constant or a variable."""

    __slots__ = ("name", "is_var", "_hash")

    def __init__(self, name: str, is_var: bool = False):
        self.name = name
        self.is_var = is_var
        self._hash = hash((0, name, is_var))

    @property
    def key(self) -> tuple:
        return (0, self.name)

    def __eq__(self, other):
        return (
            isinstance(other, Name)
            and self.name == other.name
            and self.is_var == other.is_var
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Var({self.name!r})" if self.is_var else f"Const({self.name!r})"

    def __reduce__(self):
        return (Name, (self.name, self.is_var))


class Exists:
    """Existential restriction ``some role.arg``."""

    __slots__ = ("role", "arg", "_hash", "_key")

    def __init__(self, role: str, arg: "Concept"):
        if not isinstance(arg, Concept):
            arg = Concept((arg,))
        self.role = role
        self.arg = arg
        self._hash = hash((1, role, arg))
        self._key = None

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = (1, self.role, self.arg.key)
        return self._key

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, Exists)
            and self._hash == other._hash
            and self.role == other.role
            and self.arg == other.arg
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Exists({self.role!r}, {self.arg!r})"

    def __reduce__(self):
        return (Exists, (self.role, self.arg))


Atom = Union[Name, Exists]


class Concept:
    """Conjunction of atoms.  ``Concept(())`` is top.

    The constructor stores the atoms as given; use :meth:`of` or
    :func:`conj` to get the canonical form.
    """

    __slots__ = ("atoms", "_hash", "_key")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.atoms = tuple(atoms)
        self._hash = hash(self.atoms)
        self._key = None

    @classmethod
    def of(cls, *atoms: Atom) -> "Concept":
        return canonicalize(cls(atoms))

    @property
    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple(a.key for a in self.atoms)
        return self._key

    @property
    def is_top(self) -> bool:
        return not self.atoms

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, Concept)
            and self._hash == other._hash
            and self.atoms == other.atoms
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Concept({list(self.atoms)!r})"

    def __reduce__(self):
        return (Concept, (self.atoms,))


TOP = Concept(())


def const(name: str) -> Name:
    return Name(name, False)


def var(name: str) -> Name:
    return Name(name, True)


def _canon_atom(atom: Atom) -> Atom:
    if isinstance(atom, Name):
        return atom
    return Exists(atom.role, canonicalize(atom.arg))


def canonicalize(term: Concept | Atom) -> Concept:
    """Canonical form: sorted, duplicate-free atoms, recursively."""
    if not isinstance(term, Concept):
        term = Concept((term,))
    atoms = {_canon_atom(a) for a in term.atoms}
    return Concept(sorted(atoms, key=lambda a: a.key))


def conj(*parts: Concept | Atom) -> Concept:
    """Canonical conjunction of terms and atoms (top is the unit)."""
    atoms: list[Atom] = []
    for p in parts:
        if isinstance(p, Concept):
            atoms.extend(p.atoms)
        else:
            atoms.append(p)
    return canonicalize(Concept(atoms))


def exists(role: str, arg: Concept | Atom) -> Exists:
    return Exists(role, canonicalize(arg))


@dataclass(frozen=True)
class Signature:
    constants: frozenset[str] = frozenset()
    variables: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()

    def __post_init__(self):
        for group in (self.constants, self.variables, self.roles):
            for n in group:
                if not n:
                    raise ValueError("names must be nonempty")
        if self.constants & self.variables:
            raise ValueError(
                f"names both constant and variable: {sorted(self.constants & self.variables)}"
            )
        if self.roles & (self.constants | self.variables):
            raise ValueError("role names must be disjoint from concept names")

    def union(self, other: "Signature") -> "Signature":
        return Signature(
            self.constants | other.constants,
            self.variables | other.variables,
            self.roles | other.roles,
        )

    def with_variables(self, names: Iterable[str]) -> "Signature":
        return Signature(self.constants, self.variables | frozenset(names), self.roles)


# --- structural queries ------------------------------------------------------


def atom_is_ground(atom: Atom) -> bool:
    if isinstance(atom, Name):
        return not atom.is_var
    return is_ground(atom.arg)


@lru_cache(maxsize=1 << 16)
def is_ground(term: Concept) -> bool:
    return all(atom_is_ground(a) for a in term.atoms)


def is_flat_atom(atom: Atom) -> bool:
    if isinstance(atom, Name):
        return True
    return len(atom.arg.atoms) == 1 and isinstance(atom.arg.atoms[0], Name)


def is_var_atom(atom: Atom) -> bool:
    return isinstance(atom, Name) and atom.is_var


def single_var(term: Concept) -> Name | None:
    """The variable if ``term`` is exactly one variable, else None."""
    if len(term.atoms) == 1 and is_var_atom(term.atoms[0]):
        return term.atoms[0]
    return None


def iter_names(term: Concept | Atom) -> Iterator[Name]:
    atoms = term.atoms if isinstance(term, Concept) else (term,)
    for a in atoms:
        if isinstance(a, Name):
            yield a
        else:
            yield from iter_names(a.arg)


def iter_roles(term: Concept | Atom) -> Iterator[str]:
    atoms = term.atoms if isinstance(term, Concept) else (term,)
    for a in atoms:
        if isinstance(a, Exists):
            yield a.role
            yield from iter_roles(a.arg)


def variables_of(term: Concept | Atom) -> set[str]:
    return {n.name for n in iter_names(term) if n.is_var}


# --- subsumption ---------------------------------------------------------------


def atom_subsumes(c: Atom, d: Atom) -> bool:
    """``c ⊑ d`` for atoms; variables behave as constants."""
    if isinstance(c, Name):
        return c == d
    if isinstance(d, Name):
        return False
    return c.role == d.role and subsumes(c.arg, d.arg)


@lru_cache(maxsize=1 << 18)
def subsumes(c: Concept, d: Concept) -> bool:
    """True iff ``c ⊑ d``: every top-level atom of d is above some atom of c."""
    if c == d:
        return True
    return all(any(atom_subsumes(ca, da) for ca in c.atoms) for da in d.atoms)


def dissubsumes(c: Concept, d: Concept) -> bool:
    return not subsumes(c, d)


def dissubsumption_witness(c: Concept, d: Concept) -> Atom | None:
    """A top-level atom of d not above any atom of c, if one exists."""
    for da in d.atoms:
        if not any(atom_subsumes(ca, da) for ca in c.atoms):
            return da
    return None


def equivalent(c: Concept, d: Concept) -> bool:
    return subsumes(c, d) and subsumes(d, c)


@lru_cache(maxsize=1 << 16)
def reduced(term: Concept) -> Concept:
    """Reduced form: redundant top-level atoms removed, recursively.

    Two EL terms are equivalent iff their reduced forms are equal, so this
    is a normal form modulo equivalence.
    """
    atoms = []
    for a in term.atoms:
        atoms.append(a if isinstance(a, Name) else Exists(a.role, reduced(a.arg)))
    atoms = sorted(set(atoms), key=lambda a: a.key)
    kept = [
        a
        for a in atoms
        if not any(b is not a and b != a and atom_subsumes(b, a) for b in atoms)
    ]
    return Concept(kept)


# --- size measures -------------------------------------------------------------


def size_of(x: "Concept | Atom | Statement") -> int:
    """Symbol count: one per concept name, one per ``∃r.``, n-1 per n-ary ⊓.

    Top counts as one symbol.  For a statement this is ``|lhs|·|rhs|``.
    """
    if isinstance(x, Statement):
        return size_of(x.lhs) * size_of(x.rhs)
    if isinstance(x, Name):
        return 1
    if isinstance(x, Exists):
        return 1 + size_of(x.arg)
    if not x.atoms:
        return 1
    return sum(size_of(a) for a in x.atoms) + len(x.atoms) - 1


def role_depth(x: Concept | Atom) -> int:
    if isinstance(x, Name):
        return 0
    if isinstance(x, Exists):
        return 1 + role_depth(x.arg)
    return max((role_depth(a) for a in x.atoms), default=0)


# --- statements ----------------------------------------------------------------


class Kind(enum.Enum):
    SUB = "<="
    DISSUB = "!<="


@dataclass(frozen=True)
class Statement:
    lhs: Concept
    rhs: Concept
    kind: Kind = Kind.SUB

    @property
    def is_sub(self) -> bool:
        return self.kind is Kind.SUB

    @property
    def is_dissub(self) -> bool:
        return self.kind is Kind.DISSUB

    @property
    def is_ground(self) -> bool:
        return is_ground(self.lhs) and is_ground(self.rhs)

    def variables(self) -> set[str]:
        return variables_of(self.lhs) | variables_of(self.rhs)

    def holds(self) -> bool:
        """Truth value for ground statements (variables act as constants)."""
        s = subsumes(self.lhs, self.rhs)
        return s if self.is_sub else not s

    def __repr__(self):
        from .parser import render_statement

        return f"Statement({render_statement(self)!r})"


def sub(lhs: Concept | Atom, rhs: Concept | Atom) -> Statement:
    return Statement(conj(lhs), conj(rhs), Kind.SUB)


def dissub(lhs: Concept | Atom, rhs: Concept | Atom) -> Statement:
    return Statement(conj(lhs), conj(rhs), Kind.DISSUB)


# --- substitutions -------------------------------------------------------------


class Substitution(Mapping):
    """Map from variable names to ground canonical concepts."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Mapping[str, Concept] | Iterable = ()):
        items = dict(bindings)
        for x, t in items.items():
            t = canonicalize(t)
            if not is_ground(t):
                raise ValueError(f"binding for {x!r} is not ground")
            items[x] = t
        self._bindings = items

    @classmethod
    def trusted(cls, bindings: dict[str, Concept]) -> "Substitution":
        """Wrap bindings already known to be ground and canonical."""
        obj = cls.__new__(cls)
        obj._bindings = bindings
        return obj

    def __getitem__(self, name: str) -> Concept:
        return self._bindings[name]

    def __iter__(self):
        return iter(sorted(self._bindings))

    def __len__(self):
        return len(self._bindings)

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self._bindings == other._bindings
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._bindings.items()))

    def __repr__(self):
        from .parser import render_term

        inner = ", ".join(f"{x}: {render_term(self[x])}" for x in self)
        return f"Substitution({{{inner}}})"

    def restrict(self, names: Iterable[str]) -> "Substitution":
        keep = set(names)
        return Substitution({x: t for x, t in self._bindings.items() if x in keep})

    def apply(self, term: Concept | Atom) -> Concept:
        return apply_substitution(self, term)


def _apply_atoms(s: Mapping[str, Concept], atoms: Iterable[Atom], out: list) -> None:
    for a in atoms:
        if isinstance(a, Name):
            if a.is_var:
                try:
                    out.extend(s[a.name].atoms)
                except KeyError:
                    raise UnboundVariable(a.name) from None
            else:
                out.append(a)
        else:
            out.append(Exists(a.role, apply_substitution(s, a.arg)))


def apply_substitution(s: Mapping[str, Concept], term: Concept | Atom) -> Concept:
    """Homomorphic extension of ``s`` to terms; result is canonical."""
    atoms = term.atoms if isinstance(term, Concept) else (term,)
    out: list[Atom] = []
    _apply_atoms(s, atoms, out)
    return canonicalize(Concept(out))


def substitutions_equivalent(s1: Mapping[str, Concept], s2: Mapping[str, Concept]) -> bool:
    if set(s1) != set(s2):
        raise DomainMismatch(f"domains differ: {sorted(set(s1) ^ set(s2))}")
    return all(equivalent(s1[x], s2[x]) for x in s1)


def substitution_class(s: Mapping[str, Concept]) -> tuple:
    """Hashable key identifying ``s`` modulo equivalence."""
    return tuple((x, reduced(s[x])) for x in sorted(s))
