import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certpresolve import opb
from certpresolve.checker import check
from certpresolve.generate import corpus, generate
from certpresolve.model import Constraint, Problem
from certpresolve.presolve import PresolveConfig, run
from certpresolve.presolve.postsolve import Fixed, Substituted, dumps, loads, postsolve
from certpresolve.presolve.state import DUAL_KINDS

from conftest import FIG1_OPB, best, holds, solutions
from oracle import audit


def presolve(text, *techniques, **kw):
    """Run the listed techniques, verify the certificate and the oracle; return (problem, result)."""
    p = opb.parse(text)
    r = run(p, PresolveConfig(techniques=techniques, **kw))
    v = check(p, r.certificate)
    assert v.accepted, v.summary()
    assert best(r.reduced) == best(p)
    lifted = Problem(p.names, r.reduced.constraints + tuple(r.state.equations), r.reduced.objective)
    if not any(t.dual for t in r.transactions):
        assert solutions(lifted) == solutions(p)
    else:
        assert set(solutions(lifted)) <= set(solutions(p))
    return p, r


def kinds(r):
    return [t.kind for t in r.transactions]


def lines(r):
    return r.certificate.splitlines()


# -- bound strengthening

def test_bound_strengthening_fixes_two():
    _, r = presolve("+2 x1 +3 x2 -1 x3 >= 4 ;\n", "bound_strengthening")
    assert r.state.fixed == {0: 1, 1: 1}


def test_bound_strengthening_nothing_to_do():
    _, r = presolve("+1 x1 +1 x2 >= 1 ;\n", "bound_strengthening")
    assert r.transactions == []


@pytest.mark.parametrize("mode", ["rup", "pol"])
def test_propagation_modes_same_delta(mode):
    text = "min: +1 x4 ;\n+3 x1 +1 x2 +1 x3 >= 3 ;\n+1 x1 +1 x4 +1 x5 >= 2 ;\n"
    _, r = presolve(text, "bound_strengthening", prop_cert=mode)
    assert r.state.fixed == {0: 1}
    keyword = "rup" if mode == "rup" else "pol"
    assert any(l.startswith(keyword) for l in lines(r))


def test_pol_mode_bytes_not_smaller():
    text = "+3 x1 +1 x2 +1 x3 >= 3 ;\n+2 ~x1 +1 x2 +1 x4 +1 x5 >= 2 ;\n"
    _, a = presolve(text, "bound_strengthening", prop_cert="rup")
    _, b = presolve(text, "bound_strengthening", prop_cert="pol")
    assert a.state.fixed == b.state.fixed
    assert b.stats["bytes_by_tag"]["propagation"] >= a.stats["bytes_by_tag"]["propagation"]


def test_infeasible_instance_certified():
    _, r = presolve("+1 x1 +1 x2 >= 2 ;\n+1 ~x1 >= 1 ;\n", "bound_strengthening")
    assert r.infeasible
    assert "rup >= 1 ;" in lines(r)
    assert r.reduced.constraints[0].is_contradiction()


# -- parallel rows

def test_parallel_rows_multiple():
    _, r = presolve("+1 x1 +1 x2 >= 1 ;\n+2 x1 +2 x2 >= 2 ;\n", "parallel_rows")
    assert kinds(r) == ["parallel_rows"] and len(r.reduced.constraints) == 1


def test_parallel_rows_rhs_mismatch():
    _, r = presolve("+1 x1 +1 x2 >= 1 ;\n+2 x1 +2 x2 >= 3 ;\n", "parallel_rows")
    assert r.transactions == []


def test_parallel_rows_fractional_ratio():
    _, r = presolve("+2 x1 +4 x2 >= 2 ;\n+3 x1 +6 x2 >= 3 ;\n", "parallel_rows")
    assert len(r.reduced.constraints) == 1


# -- probing

def test_probing_links_complementary_pair():
    p, r = presolve("+1 x1 +1 x2 >= 1 ;\n+1 ~x1 +1 ~x2 >= 1 ;\n", "probing", "implied_free_substitution")
    assert set(solutions(p)) == {(1, 0), (0, 1)}
    assert "probing" in kinds(r)


def test_probing_conflict_fixes():
    _, r = presolve("+2 ~x1 +1 x2 >= 2 ;\n", "probing")
    assert r.state.fixed.get(0) == 0


def test_probing_same_implication():
    _, r = presolve("+1 x1 +1 x3 >= 1 ;\n+1 ~x1 +1 x3 >= 1 ;\n", "probing")
    # x3 is the second declared variable
    assert r.state.fixed == {1: 1}
    assert any(l.endswith("+ 2 d ;") for l in lines(r))


# -- simple probing

def test_simple_probing_two_terms():
    _, r = presolve("+1 x1 +1 x2 = 1 ;\n+1 x1 +1 x3 >= 1 ;\n", "simple_probing")
    assert r.state.substituted


def test_simple_probing_partner_relations():
    p, r = presolve("+2 x1 +1 x2 +1 x3 = 2 ;\n", "simple_probing")
    assert set(solutions(p)) == {(1, 0, 0), (0, 1, 1)}
    assert "simple_probing" in kinds(r)


def test_simple_probing_not_qualifying():
    _, r = presolve("+1 x1 +1 x2 = 2 ;\n", "simple_probing")
    assert "simple_probing" not in kinds(r)


# -- sparsify

def test_sparsify_example():
    _, r = presolve("+1 x1 +1 x2 -1 x3 = 1 ;\n+1 x1 +1 x2 +1 x4 >= 2 ;\n", "sparsify")
    assert kinds(r) == ["sparsify"]
    assert Constraint(((1, 3), (1, 4)), 1) in r.reduced.constraints


def test_sparsify_needs_equality():
    _, r = presolve("+1 x1 +1 x2 >= 1 ;\n+1 x1 +1 x2 +1 x3 >= 2 ;\n", "sparsify")
    assert r.transactions == []


# -- coefficient tightening and gcd

@pytest.mark.parametrize("text,expected", [
    ("+3 x1 +5 x2 >= 3 ;\n", Constraint(((3, 1), (3, 2)), 3)),
    ("+7 x1 +2 x2 +1 ~x3 >= 4 ;\n", Constraint(((4, 1), (2, 2), (1, -3)), 4)),
])
def test_coefficient_tightening(text, expected):
    _, r = presolve(text, "coefficient_tightening")
    assert r.reduced.constraints == (expected,)
    assert any(l.endswith(" s ;") for l in lines(r))


def test_coefficient_tightening_already_tight():
    _, r = presolve("+3 x1 +3 x2 >= 3 ;\n", "coefficient_tightening")
    assert r.transactions == []


def test_gcd_rounds_degree():
    _, r = presolve("+4 x1 +4 x2 >= 3 ;\n", "gcd_simplification")
    (c,) = r.reduced.constraints
    assert kinds(r) == ["gcd_simplification"]
    assert {a for a, _ in c.terms} == {c.degree}


@pytest.mark.parametrize("text", ["+4 x1 +4 x2 -3 x3 >= 4 ;\n", "+6 x1 +6 x2 +1 x3 >= 7 ;\n"])
def test_gcd_not_applied(text):
    _, r = presolve(text, "gcd_simplification")
    assert r.transactions == []


# -- substitution

def test_fig1_substitution_reduced_problem():
    _, r = presolve(FIG1_OPB, "implied_free_substitution", obju_mode="new")
    assert opb.write(r.reduced).splitlines()[1:] == [
        "min: +1 x3 +1 x4 ;", "* objective offset 1", "+1 x2 -1 x3 -1 x4 +1 x5 >= 1 ;"]
    steps = [l for l in lines(r) if not l.startswith("*")]
    assert steps[2:] == [
        "pol 1 ~x1 + ;", "core id 4", "pol 2 x1 + ;", "core id 5", "pol 3 1 + ;", "core id 6",
        "delc 3 ; ; begin", "   pol 6 2 +", "end", "obju new +1 x3 +1 x4 1 ;",
        "delc 2 ; x1 -> 0", "delc 1 ; x1 -> 1", "delc 5", "delc 4 ; ; begin", "   pol 6 -1 +", "end",
        "end pseudo-Boolean proof"]


def test_not_implied_free_skipped():
    _, r = presolve("min: +1 x1 ;\n+2 x1 +1 x2 +1 x3 = 2 ;\n", "implied_free_substitution")
    assert r.transactions == []


def test_fig1_then_dual_fixing_sets_x2():
    _, r = presolve(FIG1_OPB, "implied_free_substitution", "duality_based_fixing")
    assert kinds(r)[:2] == ["implied_free_substitution", "dual_fixing"]
    assert r.state.fixed.get(1) == 1


# -- singletons

def test_singleton_dual():
    _, r = presolve("min: +1 x2 ;\n+1 x1 +1 x2 >= 1 ;\n", "singleton_variables")
    assert r.state.fixed.get(0) == 1


def test_singleton_substitution_path():
    _, r = presolve("min: +1 x1 +1 x2 ;\n+1 x1 +1 x2 +1 x3 = 1 ;\n", "singleton_variables", rounds=1)
    assert r.state.substituted or r.state.fixed


def test_singleton_slack_keeps_optimum():
    text = "min: +1 x1 -1 x2 ;\n+1 x1 +2 x2 +1 x3 = 2 ;\n+1 x2 +1 x3 >= 1 ;\n"
    _, r = presolve(text, "singleton_variables")
    assert "singleton_slack" in kinds(r)
    assert any(l.startswith("obju") for l in lines(r))


# -- duality and dominance

def test_dual_fixing_direction():
    _, r = presolve("min: +1 x1 ;\n+1 x1 +1 x2 >= 1 ;\n", "duality_based_fixing", rounds=1)
    assert r.transactions[0].fixed == {1: 1}


def test_dual_fixing_free_improving_variable():
    _, r = presolve("* #variable= 2 #constraint= 1\nmin: -1 x1 ;\n+1 x2 >= 0 ;\n", "duality_based_fixing")
    assert r.state.fixed.get(0) == 1


def test_dual_fixing_blocked_by_equality():
    _, r = presolve("min: +1 x1 ;\n+1 x1 -1 x2 = 0 ;\n", "duality_based_fixing")
    assert r.transactions == []


def test_dominance_adds_constraint():
    _, r = presolve("min: +1 x1 +2 x2 ;\n+1 x1 +1 x2 >= 1 ;\n", "dominated_variables")
    assert "red +1 x1 +1 ~x2 >= 1 ; x1 x2 x2 x1" in lines(r)


def test_dominance_tie_lower_index_once():
    _, r = presolve("min: +1 x1 +1 x2 ;\n+1 x1 +1 x2 >= 1 ;\n", "dominated_variables")
    reds = [l for l in lines(r) if l.startswith("red")]
    assert reds == ["red +1 x1 +1 ~x2 >= 1 ; x1 x2 x2 x1"]


def test_dominance_incomparable():
    _, r = presolve("min: +1 x1 +2 x2 ;\n+1 x2 +2 x1 >= 1 ;\n-1 x1 +1 x2 >= 0 ;\n", "dominated_variables")
    assert r.transactions == []


def test_advanced_dominance_fixes():
    # x1 dominates x2 and a row forbids both true, so x2 is fixed to 0
    text = "min: +1 x1 +2 x2 ;\n+1 ~x1 +1 ~x2 >= 1 ;\n+1 x1 +1 x2 +1 x3 >= 1 ;\n"
    _, r = presolve(text, "dominated_variables_advanced")
    assert r.state.fixed.get(1) == 0


def test_advanced_dominance_negated_literal():
    # negative objective coefficient: the rule works on the complemented literal
    text = "min: +1 x1 -2 x2 ;\n+1 x1 +1 x2 >= 1 ;\n+1 ~x1 +1 x3 >= 1 ;\n"
    _, r = presolve(text, "dominated_variables_advanced")
    assert "advanced_dominance" in kinds(r)


# -- driver

def test_presolved_instance_is_unchanged():
    p, r = presolve("min: +1 x1 +1 x2 +1 x3 ;\n+1 x1 +1 x2 >= 1 ;\n+1 x2 +1 x3 >= 1 ;\n", "probing")
    assert r.transactions == []
    steps = [l for l in lines(r) if not l.startswith("*")]
    assert steps == ["pseudo-Boolean proof version 2.0", "f 2", "end pseudo-Boolean proof"]


def test_determinism():
    text = "min: +2 x1 -1 x3 +1 x4 ;\n+1 x1 +2 x2 -1 x3 >= 1 ;\n+1 x2 +1 x3 +1 x4 = 2 ;\n+3 x1 +1 x4 >= 2 ;\n"
    a = run(opb.parse(text))
    b = run(opb.parse(text))
    assert a.certificate == b.certificate


def test_no_proof_keeps_stats():
    r = run(opb.parse(FIG1_OPB), PresolveConfig(proof=False))
    assert r.certificate is None and r.stats["transactions"] > 0


def test_time_limit_zero_stops_early():
    r = run(opb.parse(FIG1_OPB), PresolveConfig(time_limit=0.0))
    assert check(opb.parse(FIG1_OPB), r.certificate).accepted


def test_transaction_records_and_mirror():
    seen = []
    run(opb.parse(FIG1_OPB), on_transaction=lambda s, t: (s.check_mirror(), seen.append(t)))
    assert seen and all(t.steps > 0 for t in seen)
    assert {t.kind for t in seen if t.dual} <= DUAL_KINDS


# -- postsolve

def test_postsolve_fig1():
    p, r = presolve(FIG1_OPB, "implied_free_substitution")
    # reduced optimum: x2=1, x3=x4=0, x5 free
    x = postsolve(r.postsolve, {1: 1, 2: 0, 3: 0, 4: 0}, p.n_vars)
    assert x[0] == 0 and all(holds(c, tuple(x[i] for i in range(5))) for c in p.constraints)


def test_postsolve_roundtrip_serialization():
    recs = [Fixed(2, 1), Substituted(0, ((1, 1),), 1, 1)]
    assert loads(dumps(recs)) == recs
    assert postsolve(recs, {1: 0}, 3) == {0: 1, 1: 0, 2: 1}


# -- oracle over random instances

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["rup", "pol"]), st.sampled_from(["diff", "new"]))
def test_random_instances_against_oracle(seed, prop_cert, obju_mode):
    p = generate("random", seed, n_vars=8, n_cons=6)
    _, errors, _ = audit(p, PresolveConfig(prop_cert=prop_cert, obju_mode=obju_mode))
    assert errors == []


@pytest.mark.parametrize("name", ["probing", "dominated_variables_advanced", "sparsify", "simple_probing"])
def test_single_technique_against_oracle(name):
    for _, p in corpus("random", 7, 15, n_vars=9, n_cons=7):
        _, errors, _ = audit(p, PresolveConfig(techniques=("bound_strengthening", name)))
        assert errors == []
