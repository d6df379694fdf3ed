import random

import pytest

from eldisunif.core import TOP, Kind, Statement, conj, const, dissub, exists, sub, substitutions_equivalent, var
from eldisunif.goal import (
    BranchFailed,
    GoalState,
    GoalStats,
    eager_step,
    expand,
    initial_state,
    initially_solved,
    nondet_branches,
    prepare_goal_input,
    solve_goal_oriented,
)
from eldisunif.local import atom_universe, brute_force_local_solve, is_acyclic, verify_solution
from eldisunif.normalize import FlatProblem
from eldisunif.parser import parse_substitution

from problems import NONLOCAL_SOLUTION_TEXT, nonlocal_flat, nonlocal_problem, random_flat_problem

A, B, C = const("A"), const("B"), const("C")
X, Y, Z = var("X"), var("Y"), var("Z")


def flat(*stmts, vars_=None):
    return FlatProblem.build(stmts, vars=vars_ or ())


# --- input preparation ----------------------------------------------------------


def test_prepare_splits_right_sides():
    out = list(prepare_goal_input(flat(dissub(X, conj(A, B)))))
    assert [p.statements for p in out] == [(dissub(X, A),), (dissub(X, B),)]


def test_prepare_fails_on_top_right_side():
    assert list(prepare_goal_input(flat(Statement(conj(X), TOP, Kind.DISSUB)))) == []


def test_prepare_keeps_unification_problem():
    f = flat(sub(X, A), sub(B, Y))
    assert [p.statements for p in prepare_goal_input(f)] == [f.statements]


# --- state bookkeeping ----------------------------------------------------------


def test_initially_solved_shapes():
    assert initially_solved(sub(B, X)) == X
    assert initially_solved(dissub(X, exists("r", B))) == X
    assert initially_solved(dissub(X, Y)) is None
    assert initially_solved(sub(X, B)) is None


def _state(*stmts):
    f = flat(*stmts)
    return initial_state(f, atom_universe(f))


def test_expand_subsumption_and_dissubsumption():
    st = _state(sub(B, X), dissub(X, exists("r", B)))
    st.assignment["X"] = frozenset({A})
    expand(st, "X")
    assert st.gamma[sub(B, A)] is False
    assert st.gamma[dissub(A, exists("r", B))] is False


def test_expand_with_empty_set_is_noop():
    st = _state(sub(B, X))
    before = dict(st.gamma)
    expand(st, "X")
    assert st.gamma == before


def test_initial_flags():
    st = _state(sub(B, X), sub(X, B), dissub(X, exists("r", B)), dissub(exists("r", X), Y))
    assert st.gamma == {
        sub(B, X): True,
        sub(X, B): False,
        dissub(X, exists("r", B)): True,
        dissub(exists("r", X), Y): False,
    }


# --- eager rules ----------------------------------------------------------------


def test_eager_ground_solving():
    st = _state(sub(A, A))
    assert eager_step(st) == "EagerGroundSolving"
    assert st.unsolved() == []
    with pytest.raises(BranchFailed):
        eager_step(_state(sub(A, B)))


def test_eager_top_solving_fails():
    with pytest.raises(BranchFailed):
        eager_step(_state(Statement(conj(X), TOP, Kind.DISSUB)))


def test_eager_atomic_decomposition_same_role():
    st = _state(dissub(exists("r", X), exists("r", B)))
    assert eager_step(st) == "EagerAtomicDecomposition"
    assert dissub(X, B) in st.gamma


def test_eager_extension_and_solving():
    st = _state(sub(X, A))
    assert eager_step(st) == "EagerExtension"
    assert st.s_of("X") == {A}
    st = _state(dissub(conj(A, X), A))
    with pytest.raises(BranchFailed):
        eager_step(st)


def test_eager_left_decomposition():
    st = _state(dissub(conj(A, X), B))
    assert eager_step(st) == "EagerLeftDecomposition"
    assert dissub(A, B) in st.gamma and dissub(X, B) in st.gamma


# --- nondeterministic rules -----------------------------------------------------


def test_decomposition_branch():
    s = sub(conj(A, exists("s", X)), exists("s", B))
    st = _state(s)
    succ = nondet_branches(st, s)
    assert len(succ) == 1
    assert succ[0].trace[-1][0] == "Decomposition"
    assert sub(X, B) in succ[0].gamma


def test_local_extension_branches_on_nonlocal_example():
    f = nonlocal_flat()
    st = initial_state(f, atom_universe(f))
    s = Statement(TOP, conj(Y), Kind.DISSUB)
    succ = nondet_branches(st, s)
    assert sorted(n.s_of("Y") for n in succ) == sorted(frozenset({d}) for d in atom_universe(f).at_nv)


def test_local_extension_drops_cyclic_choices():
    f = flat(Statement(TOP, conj(X), Kind.DISSUB), sub(exists("r", X), Y))
    st = initial_state(f, atom_universe(f))
    st.assignment["Y"] = frozenset()
    st.extend("Y", exists("r", X))
    succ = nondet_branches(st, Statement(TOP, conj(X), Kind.DISSUB))
    # ∃r.Y is not in At_nv, so no choice closes a cycle here; every successor is acyclic
    assert all(is_acyclic(n.as_assignment()) for n in succ)
    g = flat(Statement(TOP, conj(X), Kind.DISSUB), sub(exists("r", X), Y), sub(exists("r", Y), Z))
    st = initial_state(g, atom_universe(g))
    st.extend("Y", exists("r", X))
    succ = nondet_branches(st, Statement(TOP, conj(X), Kind.DISSUB))
    assert all(exists("r", Y) not in n.s_of("X") for n in succ)


def test_no_rule_applies():
    st = _state(sub(A, B))
    assert nondet_branches(st, sub(A, B)) == []


# --- search ---------------------------------------------------------------------


def test_nonlocal_example_has_no_local_solution():
    assert list(solve_goal_oriented(nonlocal_flat())) == []


def test_nonlocal_example_becomes_local_with_role_atom():
    stmts = [s for s in nonlocal_flat().statements if s != Statement(TOP, conj(Y), Kind.DISSUB)]
    f = flat(*stmts, sub(Y, exists("r", Z)), vars_=("X", "Y"))
    found = list(solve_goal_oriented(f))
    assert found
    for _, sigma in found:
        assert verify_solution(f, sigma)
    g = nonlocal_problem()
    target = parse_substitution(NONLOCAL_SOLUTION_TEXT, g.signature)
    brute = [sigma.restrict(["X", "Y"]) for _, sigma in brute_force_local_solve(f)]
    assert any(substitutions_equivalent(s, target) for s in brute)


def test_top_solution_for_left_constant():
    found = list(solve_goal_oriented(flat(sub(A, X), vars_=("X",))))
    assert [sigma["X"] for _, sigma in found] == [TOP]


def _checked_dfs(f):
    """Re-run the search with per-step invariant checks; return solvability."""
    universe = atom_universe(f)
    any_success = False
    for g in prepare_goal_input(f):
        stack = [initial_state(g, universe)]
        while stack:
            st = stack.pop()
            try:
                while True:
                    before = dict(st.gamma)
                    rule = eager_step(st)
                    if rule is None:
                        break
                    _check_step(before, st)
            except BranchFailed:
                continue
            pending = st.unsolved()
            if not pending:
                any_success = True
                continue
            before = dict(st.gamma)
            for nxt in nondet_branches(st, pending[0]):
                _check_step(before, nxt)
                stack.append(nxt)
    return any_success


def _check_step(before: dict, st: GoalState):
    assert is_acyclic(st.as_assignment())
    assert all(st.gamma[s] for s, done in before.items() if done)
    assert sum(1 for s, done in before.items() if not done and st.gamma[s]) == 1


def test_invariants_agreement_and_budget():
    rng = random.Random(31)
    solvable = 0
    for _ in range(500):
        f = random_flat_problem(rng)
        stats = GoalStats()
        emitted = list(solve_goal_oriented(f, stats=stats))
        for _, sigma in emitted:
            assert verify_solution(f, sigma)
        assert stats.max_steps <= stats.budget
        brute = next(brute_force_local_solve(f), None)
        assert bool(emitted) == (brute is not None)
        assert _checked_dfs(f) == bool(emitted)
        solvable += bool(emitted)
    assert 100 < solvable < 400


def test_dedup_and_limit():
    f = flat(sub(A, X), sub(B, Y), vars_=("X", "Y"))
    all_found = list(solve_goal_oriented(f))
    assert len(list(solve_goal_oriented(f, max_solutions=1))) == 1
    deduped = list(solve_goal_oriented(f, dedup=True))
    assert len(deduped) <= len(all_found)


def test_trace_records_rules():
    f = flat(sub(X, A), vars_=("X",))
    (_, sigma, trace), = list(solve_goal_oriented(f, with_trace=True))
    assert sigma["X"] == conj(A)
    assert [r for r, _ in trace] == ["EagerExtension"]
