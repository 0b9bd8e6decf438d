"""Seeded random instance families.

``random`` mixes inequalities with structure the presolver reacts to
(equalities with unit coefficients, parallel copies, dominated columns);
``propagation`` chains rows so clean-up propagation fixes many variables;
``dense-objective`` pairs a large dense objective with many forced fixings.
"""
from __future__ import annotations

import random as _random

from .model import Objective, Problem, normalize

FAMILIES = ("random", "propagation", "dense-objective")


class GeneratorError(ValueError):
    pass


def _names(n):
    return tuple(f"x{i + 1}" for i in range(n))


def _assemble(n, rows, obj, offset=0):
    """``rows`` are (terms as (coef, var), rel, rhs) over 0-based vars."""
    cons = []
    eqs = []
    for terms, rel, rhs in rows:
        lits = [(c, v + 1) for c, v in terms]
        if rel == "=":
            pair = normalize(lits, "=", rhs)
            eqs.append((len(cons), len(cons) + 1))
            cons.extend((pair.geq, pair.leq))
        else:
            cons.append(normalize(lits, rel, rhs))
    objective = Objective.from_dict({v: c for v, c in obj.items() if c}, offset) if obj is not None else None
    return Problem(_names(n), tuple(cons), objective, tuple(eqs))


def random_instance(rng, n_vars=10, n_cons=8, density=0.4, max_coef=3, eq_prob=0.25, structure=True) -> Problem:
    """Feasibility is likely but not guaranteed; the rhs is set from a hidden point."""
    n = n_vars
    hidden = [rng.randint(0, 1) for _ in range(n)]
    rows = []
    for _ in range(n_cons):
        k = max(1, min(n, int(round(density * n)) + rng.randint(-1, 1)))
        vs = sorted(rng.sample(range(n), k))
        r = rng.random()
        if r < eq_prob:
            terms = [(rng.choice((-1, 1)) if rng.random() < 0.6 else rng.choice((-2, 2, 3)), v) for v in vs]
            rhs = sum(c * hidden[v] for c, v in terms)
            rows.append((terms, "=", rhs))
            continue
        terms = [(rng.choice([c for c in range(-max_coef, max_coef + 1) if c]), v) for v in vs]
        act = sum(c * hidden[v] for c, v in terms)
        rel = ">=" if rng.random() < 0.75 else "<="
        slack = rng.randint(0, 2)
        rhs = act - slack if rel == ">=" else act + slack
        rows.append((terms, rel, rhs))
    if structure and rows:
        s = rng.random()
        if s < 0.3:
            terms, rel, rhs = rng.choice(rows)
            if rel != "=":
                lam = rng.choice((2, 3))
                rows.append(([(c * lam, v) for c, v in terms], rel, rhs * lam))
        elif s < 0.5 and n >= 2:
            a, b = rng.sample(range(n), 2)
            rows.append(([(1, a), (1, b)], "=", hidden[a] + hidden[b]) if hidden[a] != hidden[b]
                        else ([(1, a), (-1, b)], "=", 0))
    obj = None
    if rng.random() < 0.85:
        obj = {v: rng.randint(-4, 4) for v in range(n) if rng.random() < 0.6}
    return _assemble(n, rows, obj, rng.randint(0, 2) if obj is not None else 0)


def propagation_instance(rng, n_vars=40, chain=15, width=4) -> Problem:
    """``chain`` rows ``a*x_p + (a-1 other literals) >= a`` that each force their pivot.

    Later rows mention earlier pivots, so every fixing also rewrites rows.
    """
    n = max(n_vars, chain + width + 2)
    order = rng.sample(range(n), n)
    pivots = order[:chain]
    pool = order[chain:]
    rows = []
    for i, p in enumerate(pivots):
        # earlier pivots appear negated, so they only help once fixed to 1
        prev = [q for q in pivots[:i]]
        helpers = rng.sample(prev, min(len(prev), rng.randint(1, 2))) if prev else []
        free = rng.sample(pool, max(1, width - len(helpers)))
        a = len(helpers) + len(free) + 1
        terms = [(a, p)] + [(-1, q) for q in helpers] + [(1, q) for q in free]
        rows.append((terms, ">=", a - len(helpers)))
    for _ in range(max(2, n // 4)):
        vs = rng.sample(pool, min(len(pool), width))
        rows.append(([(rng.randint(1, 3), v) for v in vs], ">=", 1))
    obj = {v: rng.randint(1, 5) for v in pool}
    return _assemble(n, rows, obj)


def dense_objective_instance(rng, n_obj=1024, n_fix=100) -> Problem:
    """Objective over ``n_obj`` variables; ``n_fix`` of them are forced by one row each."""
    n = max(n_obj, n_fix + 2)
    fixed = rng.sample(range(n), n_fix)
    rest = [v for v in range(n) if v not in set(fixed)]
    rows = []
    for v in fixed:
        others = rng.sample(rest, 2)
        rows.append(([(3, v), (1, others[0]), (1, others[1])], ">=", 3))
    for _ in range(max(1, len(rest) // 8)):
        vs = rng.sample(rest, min(len(rest), 3))
        rows.append(([(1, u) for u in vs], ">=", 1))
    obj = {v: rng.randint(1, 9) for v in range(n_obj)}
    return _assemble(n, rows, obj)


def generate(family, rng_or_seed, **kw) -> Problem:
    rng = rng_or_seed if isinstance(rng_or_seed, _random.Random) else _random.Random(rng_or_seed)
    if family == "random":
        return random_instance(rng, **kw)
    if family == "propagation":
        return propagation_instance(rng, **kw)
    if family == "dense-objective":
        return dense_objective_instance(rng, **kw)
    raise GeneratorError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def corpus(family, seed, count, **kw):
    """Yield ``(name, problem)`` pairs; one RNG drives the whole corpus."""
    rng = _random.Random(seed)
    for i in range(count):
        yield f"{family}-{seed}-{i:04d}", generate(family, rng, **kw)
