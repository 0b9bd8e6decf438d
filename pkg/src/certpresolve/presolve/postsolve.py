"""Postsolve log: undo records replayed in reverse to lift reduced solutions."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction


class PostsolveError(ValueError):
    pass


@dataclass(frozen=True)
class Fixed:
    var: int
    value: int


@dataclass(frozen=True)
class Substituted:
    """``var = (const - sum coefs[k] * x_k) / divisor``."""
    var: int
    coefs: tuple  # ((var, coef), ...)
    const: int
    divisor: int

    def value(self, x) -> int:
        num = self.const - sum(c * x[k] for k, c in self.coefs)
        v = Fraction(num, self.divisor)
        if v not in (0, 1):
            raise PostsolveError(f"substituted variable {self.var} evaluates to {v}")
        return int(v)


@dataclass(frozen=True)
class RowDeleted:
    cid: int


def postsolve(records, solution, n_vars=None) -> dict:
    """Map a reduced-space solution to the original space.

    ``solution`` maps variable index to 0/1; variables it does not mention
    default to 0.  Records are replayed newest first.
    """
    if n_vars is None:
        n_vars = 1 + max([k for k in solution] + [getattr(r, "var", -1) for r in records] + [-1])
    x = {v: int(solution.get(v, 0)) for v in range(n_vars)}
    for r in reversed(records):
        if isinstance(r, Fixed):
            x[r.var] = r.value
        elif isinstance(r, Substituted):
            x[r.var] = r.value(x)
    return x


def dumps(records) -> str:
    """Line-delimited JSON, one record per line."""
    out = []
    for r in records:
        if isinstance(r, Fixed):
            out.append({"kind": "fixed", "var": r.var, "value": r.value})
        elif isinstance(r, Substituted):
            out.append({"kind": "substituted", "var": r.var, "coefs": [list(t) for t in r.coefs],
                        "const": r.const, "divisor": r.divisor})
        elif isinstance(r, RowDeleted):
            out.append({"kind": "row_deleted", "id": r.cid})
    return "".join(json.dumps(o, sort_keys=True) + "\n" for o in out)


def loads(text) -> list:
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        o = json.loads(line)
        kind = o.get("kind")
        if kind == "fixed":
            records.append(Fixed(o["var"], o["value"]))
        elif kind == "substituted":
            records.append(Substituted(o["var"], tuple(tuple(t) for t in o["coefs"]), o["const"], o["divisor"]))
        elif kind == "row_deleted":
            records.append(RowDeleted(o["id"]))
        else:
            raise PostsolveError(f"unknown record kind {kind!r}")
    return records
