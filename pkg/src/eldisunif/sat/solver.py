"""A small CDCL SAT solver plus a wrapper for external DIMACS solvers.

The built-in solver uses two watched literals, first-UIP clause learning
with non-chronological backjumping, activity-based branching with phase
saving, and Luby restarts.  Clauses may be added between calls to
:meth:`CDCLSolver.solve`, which is what model enumeration needs.
"""

from __future__ import annotations

import heapq
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import ExternalSolverError, SolverTimeout

_UNASSIGNED = 0


def _luby(i: int) -> int:
    # i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ...
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        if i >= 1 << (k - 1):
            i -= (1 << (k - 1)) - 1
            k = 1
            while (1 << k) - 1 < i:
                k += 1
        else:
            k -= 1


class CDCLSolver:
    def __init__(self, num_vars: int = 0):
        self.num_vars = 0
        self.ok = True
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[], []]
        self.assign: list[int] = [0]
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.heap: list[tuple[float, int]] = []
        self.var_inc = 1.0
        self.conflicts = 0
        self.decisions = 0
        self.ensure_vars(num_vars)

    # -- bookkeeping ----------------------------------------------------------

    def ensure_vars(self, n: int) -> None:
        while self.num_vars < n:
            self.num_vars += 1
            self.assign.append(_UNASSIGNED)
            self.level.append(0)
            self.reason.append(-1)
            self.activity.append(0.0)
            self.phase.append(False)
            self.watches.append([])
            self.watches.append([])
            heapq.heappush(self.heap, (0.0, self.num_vars))

    @staticmethod
    def _w(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.phase[v] = lit > 0
            self.assign[v] = _UNASSIGNED
            self.reason[v] = -1
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    # -- clauses --------------------------------------------------------------

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause at decision level 0.  Returns False once the clause
        set is known to be unsatisfiable."""
        if not self.ok:
            return False
        self._cancel_until(0)
        seen: set[int] = set()
        clause: list[int] = []
        for lit in lits:
            if lit == 0:
                raise ValueError("literal 0 is not allowed")
            if -lit in seen:
                return True  # tautology
            if lit in seen:
                continue
            seen.add(lit)
            self.ensure_vars(abs(lit))
            val = self.value(lit)
            if val == 1:
                return True
            if val == 0:
                clause.append(lit)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._enqueue(clause[0], -1)
            if self._propagate() != -1:
                self.ok = False
            return self.ok
        ci = len(self.clauses)
        self.clauses.append(clause)
        self.watches[self._w(clause[0])].append(ci)
        self.watches[self._w(clause[1])].append(ci)
        return True

    def _propagate(self) -> int:
        """Unit propagation; returns the index of a conflicting clause or -1."""
        assign = self.assign
        clauses = self.clauses
        watches = self.watches
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            ws = watches[2 * false_lit if false_lit > 0 else -2 * false_lit + 1]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                fv = assign[first] if first > 0 else -assign[-first]
                if fv == 1:
                    ws[j] = ci
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    kv = assign[lk] if lk > 0 else -assign[-lk]
                    if kv != -1:
                        c[1], c[k] = lk, false_lit
                        watches[2 * lk if lk > 0 else -2 * lk + 1].append(ci)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if fv == -1:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(self.trail)
                    return ci
                self._enqueue(first, ci)
            del ws[j:]
        return -1

    # -- conflict analysis ----------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.num_vars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.num_vars + 1)
                         if self.assign[u] == _UNASSIGNED]
            heapq.heapify(self.heap)
        elif self.assign[v] == _UNASSIGNED:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        seen = set()
        learnt = [0]
        counter = 0
        p = 0
        idx = len(self.trail) - 1
        current = self.decision_level()
        c = self.clauses[confl]
        while True:
            for q in (c if p == 0 else c[1:]):
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if self.level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            c = self.clauses[self.reason[abs(p)]]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _pick_branch(self) -> int:
        heap = self.heap
        while heap:
            _, v = heapq.heappop(heap)
            if self.assign[v] == _UNASSIGNED:
                return v if self.phase[v] else -v
        for v in range(1, self.num_vars + 1):
            if self.assign[v] == _UNASSIGNED:
                return v if self.phase[v] else -v
        return 0

    # -- main loop ------------------------------------------------------------

    def solve(self, deadline: float | None = None) -> bool:
        if not self.ok:
            return False
        self._cancel_until(0)
        if self._propagate() != -1:
            self.ok = False
            return False
        restart_no = 1
        budget = 64 * _luby(restart_no)
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl != -1:
                self.conflicts += 1
                since_restart += 1
                if self.decision_level() == 0:
                    self.ok = False
                    return False
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[self._w(learnt[0])].append(ci)
                    self.watches[self._w(learnt[1])].append(ci)
                    self._enqueue(learnt[0], ci)
                self.var_inc *= 1.0 / 0.95
                if deadline is not None and self.conflicts % 128 == 0 and time.monotonic() > deadline:
                    raise SolverTimeout("SAT search exceeded the time limit")
                continue
            if since_restart >= budget:
                restart_no += 1
                budget = 64 * _luby(restart_no)
                since_restart = 0
                self._cancel_until(0)
                continue
            lit = self._pick_branch()
            if lit == 0:
                return True
            self.decisions += 1
            if deadline is not None and self.decisions % 512 == 0 and time.monotonic() > deadline:
                raise SolverTimeout("SAT search exceeded the time limit")
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, -1)

    def model(self) -> list[bool]:
        """Valuation indexed by variable (index 0 unused)."""
        return [False] + [self.assign[v] == 1 for v in range(1, self.num_vars + 1)]


@dataclass
class SatResult:
    satisfiable: bool
    model: list[bool] | None = None


def solve_clauses(
    num_vars: int,
    clauses: Iterable[Sequence[int]],
    deadline: float | None = None,
) -> SatResult:
    solver = CDCLSolver(num_vars)
    for c in clauses:
        if not solver.add_clause(c):
            return SatResult(False)
    if solver.solve(deadline):
        return SatResult(True, solver.model())
    return SatResult(False)


def run_external_solver(
    command: str,
    dimacs_text: str,
    num_vars: int,
    deadline: float | None = None,
) -> SatResult:
    """Run ``command`` on a DIMACS file and parse its answer.

    ``{}`` in the command is replaced by the file path; otherwise the path is
    appended.  The exit status is ignored as long as an ``s`` line appears.
    """
    from .dimacs import parse_external_model

    fd, path = tempfile.mkstemp(suffix=".cnf", prefix="eldisunif-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(dimacs_text)
        if "{}" in command:
            argv = [a.replace("{}", path) for a in shlex.split(command)]
        else:
            argv = shlex.split(command) + [path]
        timeout = None
        if deadline is not None:
            timeout = max(0.0, deadline - time.monotonic())
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise SolverTimeout(f"external solver did not finish: {command}") from None
        except OSError as e:
            raise ExternalSolverError(-1, str(e)) from None
        if not any(line.startswith("s ") for line in proc.stdout.splitlines()):
            if proc.returncode not in (0, 10, 20):
                raise ExternalSolverError(proc.returncode, proc.stderr)
        return parse_external_model(proc.stdout, num_vars)
    finally:
        os.unlink(path)
