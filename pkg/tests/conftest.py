import itertools
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

FIG1_OPB = "min: +1 x1 +1 x2 ;\n+1 x1 +1 x2 -1 x3 -1 x4 = 1 ;\n-1 x1 +1 x5 >= 0 ;\n"

FIG1_CERT = """pseudo-Boolean proof version 2.0
f 3
pol 1 ~x1 + ;
core id 4
pol 2 x1 + ;
core id 5
pol 3 1 + ;
core id 6
delc 3 ; ; begin
   pol 6 2 +
end
obju new +1 x3 +1 x4 1 ;
delc 2 ; x1 -> 0
delc 1 ; x1 -> 1
delc 5
delc 4 ; ; begin
   pol 6 -1 +
end
end pseudo-Boolean proof
"""


def lit_val(l, x):
    v = x[abs(l) - 1]
    return v if l > 0 else 1 - v


def holds(c, x):
    return sum(a * lit_val(l, x) for a, l in c.terms) >= c.degree


def points(n):
    return itertools.product((0, 1), repeat=n)


def solutions(problem):
    """Brute force: {assignment tuple: objective value} over feasible points."""
    out = {}
    f = problem.objective
    for x in points(problem.n_vars):
        if all(holds(c, x) for c in problem.constraints):
            out[x] = 0 if f is None else f.offset + sum(c * x[v] for c, v in f.terms)
    return out


def best(problem):
    sols = solutions(problem)
    return min(sols.values()) if sols else None


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
