import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certpresolve import opb
from certpresolve.generate import random_instance
from certpresolve.model import Constraint, Objective, Problem

from conftest import FIG1_OPB, solutions


def test_parse_fig1():
    p = opb.parse(FIG1_OPB)
    assert p.names == ("x1", "x2", "x3", "x4", "x5")
    assert p.objective == Objective(((1, 0), (1, 1)), 0)
    assert len(p.constraints) == 3 and p.equalities == ((0, 1),)
    assert p.constraints[2] == Constraint(((1, -1), (1, 5)), 1)


def test_decision_instance():
    p = opb.parse("+2 x1 +2 x2 >= 2 ;\n")
    assert p.objective is None and len(p.constraints) == 1


@pytest.mark.parametrize("text,line,col", [
    ("+1 y1 >= 1 ;\n", 1, 4),
    ("min: +1 x1 ;\n+1 x1 >= 1\n", 2, 11),
    ("+1 x1 >= ;\n", 1, 7),
    ("+1 x1 x2 >= 1 ;\n", 1, 7),
    ("+1 x1 >= 1 ; +1 x2 >= 1 ;\n", 1, 12),
    ("+1 x1 >= z ;\n", 1, 10),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(opb.OpbParseError) as e:
        opb.parse(text)
    assert (e.value.line, e.value.col) == (line, col)


def test_header_declares_unused_variables():
    p = opb.parse("* #variable= 4 #constraint= 1\n+1 x2 >= 1 ;\n")
    assert p.n_vars == 4


def test_write_fig1_reduced():
    p = Problem(("x1", "x2", "x3", "x4", "x5"),
                (Constraint(((1, 2), (1, -3), (1, -4), (1, 5)), 3),),
                Objective(((1, 2), (1, 3)), 1))
    assert opb.write(p).splitlines() == [
        "* #variable= 5 #constraint= 1",
        "min: +1 x3 +1 x4 ;",
        "* objective offset 1",
        "+1 x2 -1 x3 -1 x4 +1 x5 >= 1 ;",
    ]


def test_write_empty_problem():
    assert opb.write(Problem(())).splitlines() == ["* #variable= 0 #constraint= 0"]


def test_roundtrip_fixed_point_fig1():
    once = opb.write(opb.parse(FIG1_OPB))
    assert opb.write(opb.parse(once)) == once
    assert solutions(opb.parse(once)) == solutions(opb.parse(FIG1_OPB))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_roundtrip_generated(seed):
    p = random_instance(random.Random(seed), n_vars=7, n_cons=6)
    text = opb.write(p)
    q = opb.parse(text)
    assert opb.write(q) == text
    assert q.equalities == p.equalities
    assert solutions(q) == solutions(p)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="x0123456789 +-=<>;~*:min\n", max_size=60))
def test_fuzz_only_raises_parse_error(text):
    try:
        opb.parse(text)
    except opb.OpbParseError:
        pass


def test_bytes_input_and_bad_utf8():
    assert opb.parse(FIG1_OPB.encode()).n_vars == 5
    with pytest.raises(opb.OpbParseError):
        opb.parse(b"+1 x1 >= 1 ;\xff\n")
