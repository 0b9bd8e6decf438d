"""Cutting-planes rules, reverse-Polish evaluation and unit propagation."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

from .model import Constraint, lit_value, negate, normalize

_INT = re.compile(r"-?\d+\Z")
_LIT = re.compile(r"(~?)(\w+)\Z")


class DerivationError(ValueError):
    pass


# --------------------------------------------------------------------------
# rules

def add(c1: Constraint, c2: Constraint) -> Constraint:
    return normalize(c1.terms + c2.terms, ">=", c1.degree + c2.degree)


def multiply(c: Constraint, k: int) -> Constraint:
    if k <= 0:
        raise DerivationError(f"multiplier must be positive, got {k}")
    return Constraint(tuple((a * k, l) for a, l in c.terms), c.degree * k)


def _ceildiv(a: int, d: int) -> int:
    return -(-a // d)


def divide(c: Constraint, d: int) -> Constraint:
    if d <= 0:
        raise DerivationError(f"divisor must be positive, got {d}")
    return Constraint(tuple((_ceildiv(a, d), l) for a, l in c.terms), _ceildiv(c.degree, d))


def saturate(c: Constraint) -> Constraint:
    b = c.degree
    return Constraint(tuple((min(a, b), l) for a, l in c.terms if b > 0), b)


def weaken(c: Constraint, var: int) -> Constraint:
    """Drop the term on ``var``, lowering the degree by its coefficient."""
    terms = []
    degree = c.degree
    for a, l in c.terms:
        if abs(l) - 1 == var:
            degree -= a
        else:
            terms.append((a, l))
    if len(terms) == len(c.terms):
        return c
    return Constraint(tuple(terms), max(degree, 0))


def axiom(l: int) -> Constraint:
    """Literal axiom ``l >= 0``."""
    return Constraint(((1, l),), 0)


# --------------------------------------------------------------------------
# reverse Polish evaluation

def parse_literal(tok: str, var_index):
    """``x3``/``~x3`` -> literal int, or None when ``tok`` is not a known name."""
    m = _LIT.match(tok)
    if not m or m.group(2) not in var_index:
        return None
    v = var_index[m.group(2)]
    return -(v + 1) if m.group(1) else v + 1


def eval_polish(tokens, lookup, var_index) -> Constraint:
    """Evaluate a ``pol`` token list.

    ``lookup(n)`` returns the constraint for integer ``n`` (it resolves
    negative, relative IDs itself and raises ``KeyError`` for unknown ones).
    An integer immediately followed by ``*`` or ``d`` is a scalar; a literal
    followed by ``w`` is the weakening operand; otherwise integers are IDs
    and literals are axioms.
    """
    stack = []
    toks = list(tokens)
    for i, tok in enumerate(toks):
        nxt = toks[i + 1] if i + 1 < len(toks) else None
        if tok in ("+", "*", "d", "s", "w"):
            if tok == "+":
                if len(stack) < 2:
                    raise DerivationError("stack underflow at '+'")
                b, a = stack.pop(), stack.pop()
                if not (isinstance(a, Constraint) and isinstance(b, Constraint)):
                    raise DerivationError("'+' needs two constraints")
                stack.append(add(a, b))
            elif tok == "s":
                if not stack or not isinstance(stack[-1], Constraint):
                    raise DerivationError("'s' needs a constraint")
                stack.append(saturate(stack.pop()))
            else:
                if len(stack) < 2:
                    raise DerivationError(f"stack underflow at {tok!r}")
                operand, c = stack.pop(), stack.pop()
                if not isinstance(c, Constraint):
                    raise DerivationError(f"{tok!r} needs a constraint below its operand")
                if tok == "w":
                    if not isinstance(operand, _Weak):
                        raise DerivationError("'w' needs a literal operand")
                    stack.append(weaken(c, abs(operand.lit) - 1))
                else:
                    if not isinstance(operand, int) or isinstance(operand, bool):
                        raise DerivationError(f"{tok!r} needs an integer operand")
                    stack.append(multiply(c, operand) if tok == "*" else divide(c, operand))
        elif _INT.match(tok):
            n = int(tok)
            if nxt in ("*", "d"):
                stack.append(n)
            else:
                if n == 0:
                    raise DerivationError("constraint ID 0 does not exist")
                try:
                    stack.append(lookup(n))
                except KeyError:
                    raise DerivationError(f"unknown constraint ID {tok}") from None
        else:
            l = parse_literal(tok, var_index)
            if l is None:
                raise DerivationError(f"unknown token {tok!r}")
            stack.append(_Weak(l) if nxt == "w" else axiom(l))
    if len(stack) != 1:
        raise DerivationError("empty expression" if not stack else f"{len(stack)} items left on the stack")
    if not isinstance(stack[0], Constraint):
        raise DerivationError("expression does not evaluate to a constraint")
    return stack[0]


@dataclass(frozen=True)
class _Weak:
    lit: int


# --------------------------------------------------------------------------
# propagation

@dataclass
class Fixpoint:
    assignment: dict
    trail: list = field(default_factory=list)  # (literal, reason id)
    conflict: object = None


def propagate(constraints, rho0=None) -> Fixpoint:
    """Slack-based unit propagation to a fixpoint.

    ``constraints`` is an iterable of ``(id, Constraint)``; the queue visits
    constraints in ascending ID order first and then FIFO as slacks drop.
    """
    cons = sorted(constraints, key=lambda t: t[0])
    assign = dict(rho0) if rho0 else {}
    occ: dict = {}
    slack = []
    maxcoef = []
    for idx, (_, c) in enumerate(cons):
        s = -c.degree
        m = 0
        for a, l in c.terms:
            if lit_value(l, assign) != 0:
                s += a
            if a > m:
                m = a
            occ.setdefault(l, []).append((idx, a))
        slack.append(s)
        maxcoef.append(m)
    queue = deque(range(len(cons)))
    queued = [True] * len(cons)
    trail = []
    while queue:
        idx = queue.popleft()
        queued[idx] = False
        s = slack[idx]
        cid, c = cons[idx]
        if s < 0:
            return Fixpoint(assign, trail, cid)
        if maxcoef[idx] <= s:
            continue
        for a, l in c.terms:
            if a <= s:
                continue
            v = abs(l) - 1
            if v in assign:
                continue
            assign[v] = 1 if l > 0 else 0
            trail.append((l, cid))
            for j, b in occ.get(-l, ()):
                slack[j] -= b
                if not queued[j] and slack[j] < maxcoef[j]:
                    queue.append(j)
                    queued[j] = True
            if slack[idx] < 0:
                break
        if slack[idx] < 0 and not queued[idx]:
            queue.appendleft(idx)
            queued[idx] = True
    return Fixpoint(assign, trail, None)


def rup_check(constraints, c: Constraint, rho0=None) -> bool:
    """True iff propagating ``constraints`` plus the negation of ``c`` conflicts."""
    if c.is_tautology():
        return True
    cons = list(constraints)
    top = max((cid for cid, _ in cons), default=0) + 1
    cons.append((top, negate(c)))
    return propagate(cons, rho0).conflict is not None


def implies(d: Constraint, g: Constraint) -> bool:
    """Syntactic check that some positive multiple of ``d`` weakens into ``g``.

    Both constraints are saturated first.  For multiplier ``k`` the
    weakening loss is the sum, over terms of ``d``, of ``k*d_l - g_l`` when
    that is positive (all of ``k*d_l`` if ``g`` lacks ``l``); ``g`` follows
    when ``k*deg(d) - loss >= deg(g)``.
    """
    if g.degree <= 0:
        return True
    if d.is_contradiction():
        return True
    gb = g.degree
    gco = {l: min(a, gb) for a, l in g.terms}
    d = saturate(d)
    ks = {1}
    for a, l in d.terms:
        gl = gco.get(l)
        if gl:
            ks.add(max(1, gl // a))
            ks.add(max(1, _ceildiv(gl, a)))
    for k in sorted(ks):
        loss = 0
        for a, l in d.terms:
            ka = k * a
            gl = gco.get(l, 0)
            if ka > gl:
                loss += ka - gl
        if k * d.degree - loss >= gb:
            return True
    return False
