"""DIMACS CNF output, the variable-map sidecar, and solver-output parsing."""

from __future__ import annotations

from typing import Sequence

from ..errors import MalformedSolverOutput


def emit_dimacs(num_vars: int, clauses: Sequence[Sequence[int]]) -> str:
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    lines.extend(" ".join(str(l) for l in c) + " 0" if c else "0" for c in clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    """Read a DIMACS CNF file (comments allowed, clauses may span lines)."""
    num_vars = None
    declared = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise MalformedSolverOutput(f"line {lineno}: bad problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise MalformedSolverOutput(f"line {lineno}: not a literal: {tok!r}") from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(current)
    if num_vars is None:
        raise MalformedSolverOutput("missing 'p cnf' line")
    if declared is not None and declared != len(clauses):
        raise MalformedSolverOutput(f"header declares {declared} clauses, found {len(clauses)}")
    return num_vars, clauses


def parse_external_model(text: str, num_vars: int):
    """Parse competition-style output: an ``s`` status line and ``v`` lines.

    Variables not mentioned in the ``v`` lines default to false.
    """
    from .solver import SatResult

    status = None
    values = [False] * (num_vars + 1)
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("s "):
            word = line[2:].strip()
            if word == "SATISFIABLE":
                status = True
            elif word == "UNSATISFIABLE":
                status = False
            else:
                raise MalformedSolverOutput(f"unknown status {word!r}")
        elif line.startswith("v ") or line == "v":
            for tok in line[1:].split():
                try:
                    lit = int(tok)
                except ValueError:
                    raise MalformedSolverOutput(f"bad literal {tok!r} in v line") from None
                if lit == 0:
                    continue
                if abs(lit) > num_vars:
                    raise MalformedSolverOutput(f"literal {lit} out of range 1..{num_vars}")
                values[abs(lit)] = lit > 0
    if status is None:
        raise MalformedSolverOutput("no 's' status line in solver output")
    return SatResult(status, values if status else None)
