"""Unification, dismatching and local disunification of EL concept terms."""

from .core import (
    TOP,
    Concept,
    Exists,
    Name,
    Signature,
    Statement,
    Substitution,
    apply_substitution,
    conj,
    const,
    dissub,
    dissubsumes,
    equivalent,
    exists,
    reduced,
    role_depth,
    size_of,
    sub,
    substitutions_equivalent,
    subsumes,
    var,
)
from .dismatch import is_dismatching_problem, reduce_dismatching, solve_dismatching
from .engines import solve_local
from .goal import solve_goal_oriented
from .local import atom_universe, brute_force_local_solve, induced_substitution, verify_solution
from .normalize import enumerate_basic_problems, flatten, variablize_dissubsumptions
from .parser import parse_problem, parse_substitution, parse_term, render_substitution, render_term
from .pipeline import RunConfig, solve_problem

__version__ = "0.1.0"

__all__ = [
    "TOP",
    "Concept",
    "Exists",
    "Name",
    "Signature",
    "Statement",
    "Substitution",
    "apply_substitution",
    "conj",
    "const",
    "dissub",
    "dissubsumes",
    "equivalent",
    "exists",
    "reduced",
    "role_depth",
    "size_of",
    "sub",
    "substitutions_equivalent",
    "subsumes",
    "var",
    "is_dismatching_problem",
    "reduce_dismatching",
    "solve_dismatching",
    "solve_local",
    "solve_goal_oriented",
    "atom_universe",
    "brute_force_local_solve",
    "induced_substitution",
    "verify_solution",
    "enumerate_basic_problems",
    "flatten",
    "variablize_dissubsumptions",
    "parse_problem",
    "parse_substitution",
    "parse_term",
    "render_substitution",
    "render_term",
    "RunConfig",
    "solve_problem",
]
