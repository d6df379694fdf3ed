"""Text syntax for concept terms, problems and substitutions.

Grammar::

    problem   := ['vars' ident (',' ident)* ';'] (formula ';')*
    formula   := conj ('or' conj)*
    conj      := neg ('and' neg)*
    neg       := 'not' neg | '(' formula ')' | statement
    statement := term ('<=' | '!<=' | '=' | '!=') term
    term      := factor ('&' factor)*
    factor    := 'top' | ident | 'some' ident '.' factor | '(' term ')'

``#`` starts a comment that runs to the end of the line.  Names that are
not declared in the ``vars`` header are constants.  The ``_v`` prefix is
reserved for variables generated by the toolkit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .core import (
    TOP,
    Atom,
    Concept,
    Exists,
    Kind,
    Name,
    Signature,
    Statement,
    Substitution,
    conj,
    is_ground,
)
from .errors import (
    DuplicateVarDecl,
    NonGroundBinding,
    ParseError,
    ReservedName,
    RoleUsedAsConcept,
    UnknownVariable,
)

FRESH_PREFIX = "_v"
KEYWORDS = frozenset({"vars", "top", "some", "and", "or", "not"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<op>!<=|<=|!=|:=|=|&|\.|,|;|\(|\))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


# --- formula trees -------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    """A subsumption constraint ``lhs ⊑? rhs``."""

    lhs: Concept
    rhs: Concept

    @property
    def statement(self) -> Statement:
        return Statement(self.lhs, self.rhs, Kind.SUB)


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: "Formula"


Formula = Union[Leaf, And, Or, Not]


def iter_leaves(f: Formula):
    if isinstance(f, Leaf):
        yield f
    elif isinstance(f, Not):
        yield from iter_leaves(f.child)
    else:
        for c in f.children:
            yield from iter_leaves(c)


@dataclass(frozen=True)
class GeneralProblem:
    vars: tuple[str, ...]
    formula: Formula
    signature: Signature

    def leaves(self) -> list[Leaf]:
        return list(iter_leaves(self.formula))

    def as_basic(self) -> "BasicProblem | None":
        """The equivalent basic problem if the formula is a conjunction of
        possibly negated leaves, else None."""
        out: list[Statement] = []

        def walk(f) -> bool:
            if isinstance(f, Leaf):
                out.append(f.statement)
                return True
            if isinstance(f, Not) and isinstance(f.child, Leaf):
                out.append(Statement(f.child.lhs, f.child.rhs, Kind.DISSUB))
                return True
            if isinstance(f, And):
                return all(walk(c) for c in f.children)
            return False

        if not walk(self.formula):
            return None
        return BasicProblem.build(out, self.signature, self.vars)


@dataclass(frozen=True)
class BasicProblem:
    """Conjunction of subsumptions and dissubsumptions."""

    statements: tuple[Statement, ...]
    signature: Signature = field(default_factory=Signature)
    vars: tuple[str, ...] = ()

    @classmethod
    def build(
        cls,
        statements: Iterable[Statement],
        signature: Signature | None = None,
        vars: Iterable[str] | None = None,
    ) -> "BasicProblem":
        stmts = tuple(dict.fromkeys(statements))
        sig = signature_of(stmts, signature)
        names = tuple(vars) if vars is not None else tuple(sorted(sig.variables))
        return cls(stmts, sig, names)

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


def signature_of(statements: Iterable[Statement], base: Signature | None = None) -> Signature:
    from .core import iter_names, iter_roles

    consts, vars_, roles = set(), set(), set()
    for s in statements:
        for t in (s.lhs, s.rhs):
            for n in iter_names(t):
                (vars_ if n.is_var else consts).add(n.name)
            roles.update(iter_roles(t))
    sig = Signature(frozenset(consts), frozenset(vars_), frozenset(roles))
    return sig if base is None else base.union(sig)


# --- tokenizer -----------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # 'op', 'ident', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("op", "ident"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, variables=(), allow_internal: bool = False):
        self.tokens = tokenize(text)
        self.pos = 0
        self.variables: set[str] = set(variables)
        self.allow_internal = allow_internal
        self.concepts: dict[str, Token] = {}
        self.roles: dict[str, Token] = {}

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, expected: str = "", cls=ParseError, tok=None):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and (t.kind == "op" or text in KEYWORDS)

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", repr(text))
        tok = self.tok
        self.pos += 1
        return tok

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            found = t.text or "end of input"
            raise self.error(f"unexpected {found!r}", what)
        if t.text.startswith(FRESH_PREFIX) and not self.allow_internal:
            raise self.error(f"name {t.text!r} uses the reserved prefix {FRESH_PREFIX!r}", cls=ReservedName)
        self.pos += 1
        return t

    # registration
    def concept_name(self, tok: Token) -> Name:
        if tok.text in self.roles:
            raise self.error(f"{tok.text!r} is already used as a role", cls=RoleUsedAsConcept, tok=tok)
        self.concepts.setdefault(tok.text, tok)
        return Name(tok.text, tok.text in self.variables)

    def role_name(self, tok: Token) -> str:
        if tok.text in self.concepts or tok.text in self.variables:
            raise self.error(f"{tok.text!r} is already used as a concept name", cls=RoleUsedAsConcept, tok=tok)
        self.roles.setdefault(tok.text, tok)
        return tok.text

    # grammar
    def header(self) -> tuple[str, ...]:
        names: list[str] = []
        if self.accept("vars"):
            while True:
                t = self.ident("variable name")
                if t.text in names:
                    raise self.error(f"variable {t.text!r} declared twice", cls=DuplicateVarDecl, tok=t)
                names.append(t.text)
                if not self.accept(","):
                    break
            self.expect(";")
        self.variables.update(names)
        return tuple(names)

    def term(self) -> Concept:
        parts = [self.factor()]
        while self.accept("&"):
            parts.append(self.factor())
        return conj(*parts)

    def factor(self) -> Concept:
        if self.accept("top"):
            return TOP
        if self.accept("some"):
            role = self.role_name(self.ident("role name"))
            self.expect(".")
            return Concept((Exists(role, self.factor()),))
        if self.accept("("):
            t = self.term()
            self.expect(")")
            return t
        return Concept((self.concept_name(self.ident("concept name, 'top', 'some' or '('")),))

    def statement(self) -> Formula:
        lhs = self.term()
        op = self.tok
        if op.kind == "op" and op.text in ("<=", "!<=", "=", "!="):
            self.pos += 1
        else:
            raise self.error(f"unexpected {op.text or 'end of input'!r}", "'<=', '!<=', '=' or '!='")
        rhs = self.term()
        if op.text == "<=":
            return Leaf(lhs, rhs)
        if op.text == "!<=":
            return Not(Leaf(lhs, rhs))
        if op.text == "=":
            return And((Leaf(lhs, rhs), Leaf(rhs, lhs)))
        return Or((Not(Leaf(lhs, rhs)), Not(Leaf(rhs, lhs))))

    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("or"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.negation()]
        while self.accept("and"):
            parts.append(self.negation())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def negation(self) -> Formula:
        if self.accept("not"):
            return Not(self.negation())
        if self.at("("):
            # '(' opens either a grouped formula or a parenthesized term
            start = self.pos
            try:
                return self.statement()
            except ParseError as term_error:
                self.pos = start
                self.expect("(")
                try:
                    f = self.formula()
                    self.expect(")")
                except ParseError:
                    raise term_error from None
                return f
        return self.statement()

    def problem(self) -> tuple[tuple[str, ...], list[Formula]]:
        names = self.header()
        items = []
        while self.tok.kind != "eof":
            items.append(self.formula())
            self.expect(";")
        return names, items

    def signature(self) -> Signature:
        return Signature(
            frozenset(n for n in self.concepts if n not in self.variables),
            frozenset(self.variables),
            frozenset(self.roles),
        )


def parse_problem(text: str, allow_internal: bool = False) -> GeneralProblem:
    """Parse a problem file into a :class:`GeneralProblem`.

    Top-level items are conjoined.  Dissubsumptions become ``Not(Leaf)``,
    equations a conjunction of two leaves and disequations a disjunction of
    two negated leaves.
    """
    p = _Parser(text, allow_internal=allow_internal)
    names, items = p.problem()
    formula = items[0] if len(items) == 1 else And(tuple(items))
    return GeneralProblem(names, formula, p.signature())


def parse_term(text: str, variables: Iterable[str] = (), allow_internal: bool = False) -> Concept:
    p = _Parser(text, variables, allow_internal)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}", "end of term")
    return t


def parse_substitution(
    text: str, sig: Signature | None = None, allow_internal: bool = False
) -> Substitution:
    """Parse ``X := term;`` lines.  Bound names must be variables of ``sig``
    (when given) and bound terms must be ground."""
    known = set(sig.variables) if sig is not None else None
    p = _Parser(text, known or (), allow_internal)
    if sig is not None:
        for r in sig.roles:
            p.roles[r] = Token("ident", r, 0, 0)
    bindings: dict[str, Concept] = {}
    while p.tok.kind != "eof":
        t = p.ident("variable name")
        if known is not None and t.text not in known:
            raise p.error(f"{t.text!r} is not a variable of the problem", cls=UnknownVariable, tok=t)
        if t.text in bindings:
            raise p.error(f"variable {t.text!r} bound twice", cls=DuplicateVarDecl, tok=t)
        p.expect(":=")
        start = p.tok
        term = p.term()
        if not is_ground(term):
            raise p.error(f"binding for {t.text!r} mentions a variable", cls=NonGroundBinding, tok=start)
        bindings[t.text] = term
        p.expect(";")
    return Substitution(bindings)


# --- rendering -----------------------------------------------------------------


def render_atom(a: Atom) -> str:
    if isinstance(a, Name):
        return a.name
    return f"some {a.role}.{_render_factor(a.arg)}"


def _render_factor(c: Concept) -> str:
    if not c.atoms:
        return "top"
    if len(c.atoms) == 1:
        return render_atom(c.atoms[0])
    return f"({render_term(c)})"


def render_term(c: Concept) -> str:
    if not c.atoms:
        return "top"
    return " & ".join(render_atom(a) for a in c.atoms)


def render_statement(s: Statement) -> str:
    return f"{render_term(s.lhs)} {s.kind.value} {render_term(s.rhs)}"


def render_substitution(s: Substitution) -> str:
    return "".join(f"{x} := {render_term(s[x])};\n" for x in s)


def render_problem(statements: Iterable[Statement], vars: Iterable[str]) -> str:
    names = list(vars)
    lines = []
    if names:
        lines.append(f"vars {', '.join(names)};")
    lines.extend(f"{render_statement(s)};" for s in statements)
    return "\n".join(lines) + "\n"


def render_formula(f: Formula) -> str:
    if isinstance(f, Leaf):
        return f"{render_term(f.lhs)} <= {render_term(f.rhs)}"
    if isinstance(f, Not):
        if isinstance(f.child, Leaf):
            return f"{render_term(f.child.lhs)} !<= {render_term(f.child.rhs)}"
        return f"not ({render_formula(f.child)})"
    sep = " and " if isinstance(f, And) else " or "
    return sep.join(f"({render_formula(c)})" for c in f.children)
