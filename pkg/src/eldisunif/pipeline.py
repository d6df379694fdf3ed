"""End-to-end solving: route each basic problem to a complete procedure
where one exists, and to the local engines otherwise."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .core import TOP, Substitution, substitution_class
from .dismatch import is_dismatching_problem, reduce_dismatching
from .engines import solve_local
from .errors import VerificationFailed
from .local import verify_solution
from .normalize import FlatProblem, enumerate_basic_problems, flatten
from .parser import BasicProblem, GeneralProblem

UNIFICATION = "unification"
DISMATCHING = "dismatching"
LOCAL_ONLY = "local-only"


@dataclass
class RunConfig:
    engine: str = "sat"
    max_solutions: int | None = 1
    dedup: bool = False
    verify: bool = True
    timeout_ms: int | None = None
    sat_cmd: str | None = None
    force_local: bool = False
    show_internal: bool = False
    trace: bool = False
    threads: int = 1

    def deadline(self) -> float | None:
        if self.timeout_ms is None:
            return None
        return time.monotonic() + self.timeout_ms / 1000.0


@dataclass
class Found:
    substitution: Substitution
    route: str
    basic_index: int
    trace: list | None = None


@dataclass
class SolveReport:
    solutions: list[Found] = field(default_factory=list)
    routes: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.solutions:
            return 0
        if all(r != LOCAL_ONLY for r in self.routes):
            return 1
        return 2


def route_of(b: BasicProblem, force_local: bool = False) -> str:
    if not b.dissubsumptions:
        return UNIFICATION
    if not force_local and is_dismatching_problem(b):
        return DISMATCHING
    return LOCAL_ONLY


def _jobs(b: BasicProblem, route: str, on_reduced: Callable | None) -> Iterator[FlatProblem]:
    if route == DISMATCHING:
        for f in reduce_dismatching(b):
            if on_reduced is not None:
                on_reduced(f)
            yield f
    else:
        yield flatten(b)


def _solve_job(args) -> list[tuple[Substitution, list | None]]:
    f, cfg, deadline, limit = args
    out = []
    for _, sigma, trace in _local_stream(f, cfg, deadline):
        out.append((sigma, trace))
        if limit is not None and len(out) >= limit:
            break
    return out


def _local_stream(f: FlatProblem, cfg: RunConfig, deadline):
    if cfg.trace and cfg.engine == "rules":
        from .goal import solve_goal_oriented

        names = f.all_vars()
        for s, sigma, trace in solve_goal_oriented(f, deadline=deadline, with_trace=True):
            yield s, Substitution({x: sigma[x] if x in sigma else TOP for x in names}), trace
        return
    for s, sigma in solve_local(f, cfg.engine, None, deadline=deadline, sat_cmd=cfg.sat_cmd):
        yield s, sigma, None


def solve_problem(
    g: GeneralProblem,
    cfg: RunConfig,
    on_reduced: Callable[[FlatProblem], None] | None = None,
    on_local_problem: Callable[[FlatProblem], None] | None = None,
) -> SolveReport:
    """Solve ``g`` per ``cfg``.  Every reported substitution is restricted to
    the declared variables (unless ``show_internal``) and, with ``verify``,
    re-checked against ``g``."""
    deadline = cfg.deadline()
    report = SolveReport()
    declared = tuple(g.vars)
    seen = set()

    def accept(sigma: Substitution, route: str, k: int, trace) -> bool:
        full = {x: sigma[x] if x in sigma else TOP for x in declared}
        if cfg.show_internal:
            full.update({x: t for x, t in sigma.items()})
        out = Substitution(full)
        if cfg.verify and not verify_solution(g, out):
            raise VerificationFailed("a produced substitution does not solve the problem")
        if cfg.dedup:
            key = substitution_class(out.restrict(declared))
            if key in seen:
                return False
            seen.add(key)
        report.solutions.append(Found(out, route, k, trace))
        return cfg.max_solutions is not None and len(report.solutions) >= cfg.max_solutions

    for k, b in enumerate(enumerate_basic_problems(g), 1):
        route = route_of(b, cfg.force_local)
        report.routes.append(route)
        jobs = _jobs(b, route, on_reduced)
        if on_local_problem is not None:
            jobs = _tap(jobs, on_local_problem)
        remaining = None if cfg.max_solutions is None else cfg.max_solutions - len(report.solutions)
        if cfg.threads > 1:
            job_list = list(jobs)
            with ProcessPoolExecutor(cfg.threads) as pool:
                results = list(pool.map(_solve_job, [(f, cfg, deadline, None if cfg.dedup else remaining) for f in job_list]))
            for sols in results:
                for sigma, trace in sols:
                    if accept(sigma, route, k, trace):
                        return report
        else:
            for f in jobs:
                for _, sigma, trace in _local_stream(f, cfg, deadline):
                    if accept(sigma, route, k, trace):
                        return report
    return report


def _tap(it, fn):
    for x in it:
        fn(x)
        yield x
