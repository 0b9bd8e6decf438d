"""Exact data model for 0-1 integer linear programs.

Literals are plain ints: variable index ``v`` (0-based) is the positive
literal ``v + 1`` and the negative literal ``-(v + 1)``.  All coefficients
are Python ints, so nothing here can overflow or round.

A :class:`Constraint` is always in normalized form
``sum a_j * l_j >= b`` with every ``a_j > 0``, one term per variable, terms
sorted by variable index, and ``b >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

Assignment = dict  # var index -> 0 | 1
Substitution = dict  # var index -> bool constant | literal int


class ModelError(ValueError):
    pass


def lit(var: int, negated: bool = False) -> int:
    return -(var + 1) if negated else var + 1


def lit_var(l: int) -> int:
    return abs(l) - 1


def lit_negated(l: int) -> bool:
    return l < 0


def lit_value(l: int, assignment: Mapping[int, int]):
    """Value of a literal under a partial assignment, or None if unassigned."""
    v = assignment.get(abs(l) - 1)
    if v is None:
        return None
    return v if l > 0 else 1 - v


def var_name(var: int, names=None) -> str:
    if names is not None:
        return names[var]
    return f"x{var + 1}"


def lit_name(l: int, names=None) -> str:
    n = var_name(abs(l) - 1, names)
    return "~" + n if l < 0 else n


@dataclass(frozen=True)
class Constraint:
    terms: tuple = ()  # ((coef, literal), ...) sorted by variable
    degree: int = 0

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    @property
    def coef_sum(self) -> int:
        return sum(a for a, _ in self.terms)

    @property
    def slack(self) -> int:
        return self.coef_sum - self.degree

    def is_tautology(self) -> bool:
        return self.degree <= 0

    def is_contradiction(self) -> bool:
        return self.coef_sum < self.degree

    def variables(self):
        return [abs(l) - 1 for _, l in self.terms]

    def coef_of(self, var: int):
        """(coefficient, literal) of ``var`` or None."""
        for a, l in self.terms:
            if abs(l) - 1 == var:
                return a, l
        return None

    def satisfied_by(self, assignment: Mapping[int, int]) -> bool:
        total = 0
        for a, l in self.terms:
            if lit_value(l, assignment):
                total += a
        return total >= self.degree

    def linear(self):
        """Return ``(coefs, rhs)`` with this constraint == ``sum coefs[v]*x_v >= rhs``."""
        coefs = {}
        rhs = self.degree
        for a, l in self.terms:
            if l > 0:
                coefs[l - 1] = a
            else:
                coefs[-l - 1] = -a
                rhs -= a
        return coefs, rhs

    def to_str(self, names=None) -> str:
        parts = [f"+{a} {lit_name(l, names)}" for a, l in self.terms]
        parts.append(f">= {self.degree}")
        return " ".join(parts)

    def __str__(self):
        return self.to_str()


TRIVIAL = Constraint((), 0)
FALSE = Constraint((), 1)


@dataclass(frozen=True)
class Equality:
    geq: Constraint
    leq: Constraint  # the <= direction, itself written as a normalized >=

    def linear(self):
        return self.geq.linear()


@dataclass(frozen=True)
class ScaledEquality:
    equality: Equality
    s_e: int
    s_d: int

    def __post_init__(self):
        if self.s_e == 0 or self.s_d <= 0:
            raise ModelError("scale needs s_e != 0 and s_d > 0")
        from math import gcd
        if gcd(self.s_e, self.s_d) != 1:
            raise ModelError("scale must be in lowest terms")


@dataclass(frozen=True)
class Objective:
    terms: tuple = ()  # ((coef, var), ...) sorted by var, no zero coefficients
    offset: int = 0

    @classmethod
    def from_dict(cls, coefs: Mapping[int, int], offset: int = 0) -> "Objective":
        return cls(tuple((c, v) for v, c in sorted(coefs.items()) if c != 0), offset)

    def as_dict(self) -> dict:
        return {v: c for c, v in self.terms}

    def value(self, assignment: Mapping[int, int]) -> int:
        return self.offset + sum(c * assignment.get(v, 0) for c, v in self.terms)

    def to_str(self, names=None) -> str:
        parts = [f"{c:+d} {var_name(v, names)}" for c, v in self.terms]
        if self.offset:
            parts.append(str(self.offset))
        return " ".join(parts)


@dataclass(frozen=True)
class Problem:
    names: tuple  # display name per variable index
    constraints: tuple = ()  # normalized Constraints; equality halves are consecutive
    objective: Objective | None = None
    equalities: tuple = ()  # (geq index, leq index) pairs into ``constraints``

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def __post_init__(self):
        n = len(self.names)
        for c in self.constraints:
            for _, l in c.terms:
                if not 0 <= abs(l) - 1 < n:
                    raise ModelError(f"literal {l} references an undeclared variable")
        if self.objective is not None:
            for _, v in self.objective.terms:
                if not 0 <= v < n:
                    raise ModelError(f"objective references undeclared variable {v}")

    def feasible(self, assignment: Mapping[int, int]) -> bool:
        return all(c.satisfied_by(assignment) for c in self.constraints)


# --------------------------------------------------------------------------
# normalization

def _collect(terms: Iterable) -> tuple[dict, int]:
    """Fold signed ``(coef, literal)`` terms into a linear form over positive variables."""
    coefs: dict = {}
    const = 0
    for a, l in terms:
        if a == 0:
            continue
        v = abs(l) - 1
        if l > 0:
            coefs[v] = coefs.get(v, 0) + a
        else:
            # a * ~x == a - a * x
            coefs[v] = coefs.get(v, 0) - a
            const += a
    return coefs, const


def from_linear(coefs: Mapping[int, int], rhs: int) -> Constraint:
    """Normalize ``sum coefs[v] * x_v >= rhs``."""
    terms = []
    for v in sorted(coefs):
        c = coefs[v]
        if c > 0:
            terms.append((c, v + 1))
        elif c < 0:
            terms.append((-c, -(v + 1)))
            rhs -= c
    return Constraint(tuple(terms), max(rhs, 0))


def normalize(terms: Iterable, relation: str = ">=", rhs: int = 0):
    """Normalize a raw constraint with signed coefficients over literals.

    Returns a :class:`Constraint` for ``>=``/``<=`` and an :class:`Equality`
    for ``=``.
    """
    coefs, const = _collect(terms)
    rhs = rhs - const
    if relation == ">=":
        return from_linear(coefs, rhs)
    if relation == "<=":
        return from_linear({v: -c for v, c in coefs.items()}, -rhs)
    if relation == "=":
        return Equality(from_linear(coefs, rhs),
                        from_linear({v: -c for v, c in coefs.items()}, -rhs))
    raise ModelError(f"unknown relation {relation!r}")


def renormalize(c: Constraint) -> Constraint:
    return normalize(c.terms, ">=", c.degree)


def negate(c: Constraint) -> Constraint:
    """``sum a_j l_j <= b - 1``, normalized."""
    return normalize(c.terms, "<=", c.degree - 1)


def restrict(c: Constraint, rho: Mapping[int, int]) -> Constraint:
    terms = []
    degree = c.degree
    for a, l in c.terms:
        val = lit_value(l, rho)
        if val is None:
            terms.append((a, l))
        elif val:
            degree -= a
    return Constraint(tuple(terms), max(degree, 0))


def image(l: int, omega: Mapping):
    """Image of literal ``l`` under ``omega``: a bool constant or a literal.

    Substitution images use ``True``/``False`` for the constants 1/0 and
    plain ints for literals, so ``{0: True}`` is x1 -> 1 while ``{0: 2}``
    is x1 -> x2.
    """
    v = abs(l) - 1
    if v not in omega:
        return l
    img = omega[v]
    if type(img) is bool:
        return img if l > 0 else not img
    return img if l > 0 else -img


def apply_substitution(c, omega: Mapping):
    """Simultaneous substitution on a Constraint or Objective, renormalized."""
    if isinstance(c, Objective):
        coefs: dict = {}
        offset = c.offset
        for a, v in c.terms:
            img = image(v + 1, omega)
            if type(img) is bool:
                offset += a * img
            elif img > 0:
                coefs[img - 1] = coefs.get(img - 1, 0) + a
            else:
                coefs[-img - 1] = coefs.get(-img - 1, 0) - a
                offset += a
        return Objective.from_dict(coefs, offset)
    terms = []
    degree = c.degree
    for a, l in c.terms:
        img = image(l, omega)
        if type(img) is bool:
            if img:
                degree -= a
        else:
            terms.append((a, img))
    return normalize(terms, ">=", degree)


def objective_constraint(lhs: Objective, rhs: Objective) -> Constraint:
    """Normalized ``lhs >= rhs`` with identical terms cancelled."""
    coefs = lhs.as_dict()
    for c, v in rhs.terms:
        coefs[v] = coefs.get(v, 0) - c
    return from_linear({v: c for v, c in coefs.items() if c}, rhs.offset - lhs.offset)


# --------------------------------------------------------------------------
# brute-force oracle

def _matrix(n: int) -> np.ndarray:
    # rows in lexicographic order, variable 0 most significant
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int64)


_SMALL = 1 << 40


def _linear_values(X: np.ndarray, coefs: Mapping[int, int], const: int = 0):
    big = any(abs(c) >= _SMALL for c in coefs.values()) or abs(const) >= _SMALL
    if big:
        out = np.full(X.shape[0], const, dtype=object)
        for v, c in coefs.items():
            out = out + X[:, v].astype(object) * c
        return out
    out = np.full(X.shape[0], const, dtype=np.int64)
    for v, c in coefs.items():
        out += X[:, v] * c
    return out


def feasible_mask(p: Problem, X: np.ndarray | None = None) -> np.ndarray:
    if X is None:
        X = _matrix(p.n_vars)
    mask = np.ones(X.shape[0], dtype=bool)
    for c in p.constraints:
        coefs, rhs = c.linear()
        mask &= _linear_values(X, coefs) >= rhs
    return mask


def objective_values(p: Problem, X: np.ndarray):
    if p.objective is None:
        return np.zeros(X.shape[0], dtype=np.int64)
    return _linear_values(X, p.objective.as_dict(), p.objective.offset)


def enumerate_solutions(p: Problem, var_limit: int = 20) -> list:
    """All feasible total assignments with their objective values.

    Exhaustive over ``2**n`` points in lexicographic order (x1 most
    significant).  Decision instances report value 0.
    """
    n = p.n_vars
    if n > var_limit:
        raise ModelError(f"{n} variables exceeds the enumeration limit {var_limit}")
    X = _matrix(n)
    mask = feasible_mask(p, X)
    vals = objective_values(p, X)
    out = []
    for i in np.flatnonzero(mask):
        row = X[i]
        out.append(({v: int(row[v]) for v in range(n)}, int(vals[i])))
    return out


def optimum(p: Problem, var_limit: int = 20):
    """Minimum objective value, or None if infeasible."""
    n = p.n_vars
    if n > var_limit:
        raise ModelError(f"{n} variables exceeds the enumeration limit {var_limit}")
    X = _matrix(n)
    mask = feasible_mask(p, X)
    if not mask.any():
        return None
    return int(objective_values(p, X)[mask].min())
