"""SAT-based local disunification."""

from .encoding import (
    CnfInstance,
    SatVarMap,
    build_clauses,
    decode,
    encode_solution_as_valuation,
    enumerate_models,
    expected_clause_counts,
    expected_num_vars,
)
from .solver import CDCLSolver, SatResult, solve_clauses

__all__ = [
    "CnfInstance",
    "SatVarMap",
    "build_clauses",
    "decode",
    "encode_solution_as_valuation",
    "enumerate_models",
    "expected_clause_counts",
    "expected_num_vars",
    "CDCLSolver",
    "SatResult",
    "solve_clauses",
]
