import itertools
import random

import pytest

from eldisunif.core import (
    TOP,
    Concept,
    Kind,
    Statement,
    Substitution,
    apply_substitution,
    conj,
    const,
    dissub,
    exists,
    is_flat_atom,
    single_var,
    sub,
    substitution_class,
    var,
)
from eldisunif.errors import NotFlat
from eldisunif.engines import solve_local
from eldisunif.local import atom_universe, brute_force_local_solve, verify_solution
from eldisunif.normalize import (
    FlatProblem,
    Lit,
    as_flat_problem,
    enumerate_basic_problems,
    flatten,
    propositional_abstraction,
    variablize_dissubsumptions,
)
from eldisunif.parser import And, GeneralProblem, Leaf, Not, Or, parse_problem, signature_of

from problems import (
    bounded_solutions,
    ground_candidates,
    nonlocal_flat,
    random_basic_problem,
    random_flat_problem,
    random_term,
)

A, B, C = const("A"), const("B"), const("C")
X, Y = var("X"), var("Y")
V1 = var("_v1")


def assert_flat_shape(f: FlatProblem):
    for s in f.statements:
        assert all(is_flat_atom(a) for a in s.lhs.atoms + s.rhs.atoms)
        if s.is_sub:
            assert len(s.rhs.atoms) == 1


# --- propositional abstraction --------------------------------------------------


def test_abstraction_of_negation():
    g = parse_problem("A !<= B;")
    skeleton, leaves = propositional_abstraction(g)
    assert skeleton == Not(Lit(1))
    assert leaves == {1: Leaf(conj(A), conj(B))}


def test_abstraction_shares_repeated_leaves():
    g = parse_problem("vars X; X <= A and (X <= B or not X <= A);")
    skeleton, leaves = propositional_abstraction(g)
    assert len(leaves) == 2
    assert skeleton == And((Lit(1), Or((Lit(2), Not(Lit(1))))))


def test_abstraction_of_basic_problem_is_literal_conjunction():
    skeleton, _ = propositional_abstraction(parse_problem("vars X; X <= A; X !<= B;"))
    assert skeleton == And((Lit(1), Not(Lit(2))))


# --- basic problem enumeration --------------------------------------------------


def test_basic_problem_yields_itself():
    g = parse_problem("vars X; X <= A; X !<= B;")
    assert list(enumerate_basic_problems(g)) == [g.as_basic()]


def test_contradiction_yields_nothing():
    assert list(enumerate_basic_problems(parse_problem("vars X; X <= A and not X <= A;"))) == []


def test_disjunction_yields_three():
    g = parse_problem("vars X; X <= A or X <= B;")
    kinds = [tuple(s.kind for s in b.statements) for b in enumerate_basic_problems(g)]
    assert kinds == [(Kind.SUB, Kind.SUB), (Kind.SUB, Kind.DISSUB), (Kind.DISSUB, Kind.SUB)]


def _random_formula(rng, leaves, depth):
    if depth == 0 or rng.random() < 0.3:
        leaf = rng.choice(leaves)
        return Not(leaf) if rng.random() < 0.4 else leaf
    kind = rng.choice([And, Or, Not])
    if kind is Not:
        return Not(_random_formula(rng, leaves, depth - 1))
    return kind(tuple(_random_formula(rng, leaves, depth - 1) for _ in range(2)))


def test_basic_problems_cover_exactly_the_solutions():
    rng = random.Random(3)
    candidates = ground_candidates(1)
    for _ in range(60):
        leaves = [Leaf(random_term(rng, 1, ("X",)), random_term(rng, 1, ("X",))) for _ in range(rng.randint(1, 4))]
        formula = _random_formula(rng, leaves, 3)
        stmts = [leaf.statement for leaf in leaves]
        g = GeneralProblem(("X",), formula, signature_of(stmts))
        basics = list(enumerate_basic_problems(g))
        assert len(basics) <= 2 ** len(set(leaves))
        for value in candidates:
            s = Substitution({"X": value})
            assert verify_solution(g, s) == any(verify_solution(b, s) for b in basics)


# --- flattening -----------------------------------------------------------------


def test_flatten_example():
    b = parse_problem("vars X; X <= some r.(A & B);").as_basic()
    f = flatten(b)
    assert set(f.statements) == {
        sub(X, exists("r", V1)),
        sub(conj(A, B), V1),
        sub(V1, A),
        sub(V1, B),
    }
    assert f.fresh_vars == {"_v1": conj(A, B)}
    assert f.origin is b


def test_flatten_identity_on_flat_input():
    b = nonlocal_flat().origin
    f = flatten(b)
    assert set(f.statements) == set(b.statements)
    assert f.fresh_vars == {}


def test_flatten_splits_and_shares_abbreviations():
    b = parse_problem("vars X; X <= A & some r.(A & B); some s.(A & B) !<= X;").as_basic()
    f = flatten(b)
    assert_flat_shape(f)
    assert len(f.fresh_vars) == 1
    assert sub(X, A) in f.statements


def test_flatten_drops_top_right_side():
    b = parse_problem("vars X; X <= top;").as_basic()
    assert flatten(b).statements == ()


def test_flat_problem_rejects_nested_atoms():
    with pytest.raises(NotFlat):
        FlatProblem.build([sub(X, exists("r", conj(A, B)))])
    with pytest.raises(NotFlat):
        FlatProblem.build([sub(X, conj(A, B))])


def _ground_value(term, sigma):
    return apply_substitution(sigma, term)


def test_flatten_solution_transfer():
    rng = random.Random(5)
    candidates = ground_candidates(1)
    transferred = solvable = 0
    for _ in range(300):
        b = random_basic_problem(rng, depth=3)
        f = flatten(b)
        assert_flat_shape(f)
        names = tuple(sorted(b.variables())) or ("X",)
        # every bounded solution of b extends to a solution of f
        for sigma in itertools.islice(bounded_solutions(b, names, candidates), 3):
            ext = dict(sigma)
            for v, t in f.fresh_vars.items():
                ext[v] = _ground_value(t, ext)
            assert verify_solution(f, Substitution(ext))
            transferred += 1
        # every local solution of f restricts to a solution of b
        for _, sigma in solve_local(f, "sat", 2):
            assert verify_solution(b, sigma.restrict(b.variables()))
            solvable += 1
    assert transferred > 50 and solvable > 50


# --- variablization -------------------------------------------------------------


def _flat(stmts, vars_):
    return FlatProblem.build(stmts, vars=vars_)


def test_variablize_keeps_variable_only_dissubsumptions():
    f = _flat([dissub(X, Y)], ("X", "Y"))
    assert variablize_dissubsumptions(f) is f


def test_variablize_constant_side():
    f = variablize_dissubsumptions(_flat([dissub(A, Y)], ("Y",)))
    assert set(f.statements) == {sub(V1, A), sub(A, V1), dissub(V1, Y)}
    assert f.fresh_vars == {"_v1": conj(A)}


def test_variablize_top_side():
    f = variablize_dissubsumptions(_flat([dissub(TOP, Y)], ("Y",)))
    assert set(f.statements) == {Statement(TOP, conj(V1), Kind.SUB), dissub(V1, Y)}


def test_variablize_shape():
    rng = random.Random(8)
    for _ in range(200):
        f = variablize_dissubsumptions(random_flat_problem(rng))
        assert_flat_shape(f)
        for s in f.dissubsumptions:
            assert single_var(s.lhs) and single_var(s.rhs)


def _local_classes(f, names):
    return {
        substitution_class(Substitution({x: sigma[x] for x in names}))
        for _, sigma in brute_force_local_solve(f)
    }


def test_variablize_preserves_local_solutions():
    rng = random.Random(9)
    compared = 0
    while compared < 200:
        f = random_flat_problem(rng, max_nv=4, max_statements=3)
        g = variablize_dissubsumptions(f)
        u = atom_universe(g)
        if len(u.vars) * len(u.at_nv) > 14:
            continue
        assert _local_classes(f, f.vars) == _local_classes(g, f.vars)
        compared += 1


def test_as_flat_problem_keeps_statements():
    b = nonlocal_flat().origin
    assert as_flat_problem(b).statements == b.statements
    assert isinstance(b.statements[0].lhs, Concept)
