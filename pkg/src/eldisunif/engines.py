"""Uniform entry point for the three local solvers."""

from __future__ import annotations

from typing import Iterator

from .core import TOP, Substitution, substitution_class
from .local import Assignment, brute_force_local_solve
from .normalize import FlatProblem, variablize_dissubsumptions

ENGINES = ("sat", "rules", "brute")


def solve_local(
    f: FlatProblem,
    engine: str = "sat",
    max_solutions: int | None = None,
    dedup: bool = False,
    deadline: float | None = None,
    sat_cmd: str | None = None,
) -> Iterator[tuple[Assignment, Substitution]]:
    """Local solutions of ``f`` from the chosen engine.

    Substitutions bind every variable of ``f`` (including ones introduced by
    flattening) and nothing else.
    """
    names = f.all_vars()
    if engine == "brute":
        stream = brute_force_local_solve(f, deadline=deadline)
    elif engine == "rules":
        from .goal import solve_goal_oriented

        stream = solve_goal_oriented(f, deadline=deadline)
    elif engine == "sat":
        from .sat.encoding import enumerate_models

        stream = enumerate_models(variablize_dissubsumptions(f), deadline=deadline, sat_cmd=sat_cmd)
    else:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")

    seen = set()
    found = 0
    for s, sigma in stream:
        s = Assignment({x: s[x] for x in names})
        sigma = Substitution({x: sigma[x] if x in sigma else TOP for x in names})
        if dedup:
            key = substitution_class(sigma)
            if key in seen:
                continue
            seen.add(key)
        yield s, sigma
        found += 1
        if max_solutions is not None and found >= max_solutions:
            return


def has_local_solution(f: FlatProblem, engine: str = "sat", **kw) -> bool:
    return next(solve_local(f, engine, 1, **kw), None) is not None
