from hypothesis import given, settings
from hypothesis import strategies as st

from certpresolve.model import (
    Constraint,
    Equality,
    Objective,
    Problem,
    apply_substitution,
    enumerate_solutions,
    negate,
    normalize,
    objective_constraint,
    optimum,
    restrict,
)
from certpresolve import opb

from conftest import FIG1_OPB, best, holds, points, solutions


def C(*terms, d):
    return Constraint(tuple(terms), d)


def test_normalize_flips_negative_coefficient():
    assert normalize([(2, 1), (-3, 2)], ">=", -1) == C((2, 1), (3, -2), d=2)


def test_normalize_equality_pair():
    eq = normalize([(1, 1), (1, 2), (-1, 3), (-1, 4)], "=", 1)
    assert isinstance(eq, Equality)
    assert eq.geq == C((1, 1), (1, 2), (1, -3), (1, -4), d=3)
    assert eq.leq == C((1, -1), (1, -2), (1, 3), (1, 4), d=1)


def test_normalize_tautology_clamps_degree():
    assert normalize([], ">=", -5) == Constraint((), 0)


def test_normalize_merges_and_sorts():
    c = normalize([(1, 3), (2, 1), (1, -3)], ">=", 2)
    # x3 + ~x3 = 1 cancels into the degree
    assert c == C((2, 1), d=1)


def test_negate_examples():
    assert negate(C((1, 1), (1, 2), d=1)) == C((1, -1), (1, -2), d=2)
    assert negate(C((2, 1), (3, 2), d=4)) == C((2, -1), (3, -2), d=2)
    assert negate(Constraint((), 0)).is_contradiction()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4).filter(bool), st.integers(1, 4)), min_size=1, max_size=4),
       st.integers(-6, 8))
def test_negate_complements_solution_set(raw, rhs):
    c = normalize([(a, v) for a, v in raw], ">=", rhs)
    nc = negate(c)
    for x in points(4):
        assert holds(c, x) != holds(nc, x)


def test_restrict_examples():
    c = C((2, 1), (3, 2), d=4)
    assert restrict(c, {0: 1}) == C((3, 2), d=2)
    r = restrict(c, {0: 0, 1: 0})
    assert r.terms == () and r.degree == 4 and r.is_contradiction()
    assert restrict(C((1, 1), (1, -2), d=1), {1: 1}) == C((1, 1), d=1)


def test_substitution_literal_image_gives_tautology():
    assert apply_substitution(C((1, 1), (1, 2), d=1), {0: -2}).is_tautology()


def test_substitution_on_objective_folds_constant():
    f = Objective(((1, 0), (1, 1)), 0)
    assert apply_substitution(f, {0: True}) == Objective(((1, 1),), 1)


def test_identity_substitution():
    c = C((2, 1), (1, -3), d=2)
    assert apply_substitution(c, {}) == c


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.sampled_from([1, -1, 2, -2, 3, -3])), min_size=1, max_size=3,
                unique_by=lambda t: abs(t[1])),
       st.integers(0, 6),
       st.dictionaries(st.integers(0, 2), st.one_of(st.booleans(), st.sampled_from([1, -1, 2, -2, 3, -3])),
                       max_size=2))
def test_substitution_semantics(terms, degree, omega):
    c = normalize(terms, ">=", degree)
    s = apply_substitution(c, omega)
    for x in points(3):
        # value of x under omega: image of each variable evaluated at x
        y = list(x)
        for v, img in omega.items():
            if type(img) is bool:
                y[v] = int(img)
            else:
                y[v] = x[abs(img) - 1] if img > 0 else 1 - x[abs(img) - 1]
        assert holds(s, x) == holds(c, tuple(y))


def test_objective_constraint_cancels_common_terms():
    f = Objective(((1, 0), (1, 1)), 0)
    g = Objective(((1, 1),), 1)
    # x1 + x2 >= x2 + 1  <=>  x1 >= 1
    assert objective_constraint(f, g) == C((1, 1), d=1)


def test_enumerate_fig1():
    p = opb.parse(FIG1_OPB)
    sols = enumerate_solutions(p)
    # four (x1..x4) patterns satisfy the equality; x5 >= x1 leaves 1 or 2 choices each
    assert len(sols) == len(solutions(p)) == 5
    assert min(v for _, v in sols) == 1 == optimum(p)


def test_enumerate_unsat_and_empty():
    unsat = Problem(("x1",), (C((1, 1), d=1), C((1, -1), d=1)))
    assert enumerate_solutions(unsat) == []
    assert optimum(unsat) is None
    free = Problem(("x1", "x2"), (), Objective(((1, 0),), 0))
    sols = enumerate_solutions(free)
    assert len(sols) == 4 and min(v for _, v in sols) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_numpy_oracle_matches_brute_force(seed):
    from certpresolve.generate import random_instance
    import random
    p = random_instance(random.Random(seed), n_vars=6, n_cons=5)
    ours = {tuple(a[v] for v in range(p.n_vars)): val for a, val in enumerate_solutions(p)}
    assert ours == solutions(p)
    assert optimum(p) == best(p)


def test_big_coefficients_exact():
    big = 10**30
    p = Problem(("x1", "x2"), (C((big, 1), (big + 1, 2), d=2 * big + 1),), Objective(((big, 0),), 0))
    sols = enumerate_solutions(p)
    assert [a for a, _ in sols] == [{0: 1, 1: 1}]
    assert optimum(p) == big
