"""OPB reader and writer (linear pseudo-Boolean competition format).

Grammar handled here::

    * #variable= 5 #constraint= 2        (optional header comment)
    min: +1 x1 +1 x2 ;                   (optional objective)
    +1 x1 +1 x2 -1 x3 -1 x4 = 1 ;
    -1 x1 +1 x5 >= 0 ;

Variables must be named ``x<digits>``; ``~x3`` is the negated literal.
Objective offsets are carried in a ``* objective offset <k>`` comment since
the format has no native syntax for them.
"""
from __future__ import annotations

import re

from .model import Equality, Objective, Problem, _collect, normalize

_VAR = re.compile(r"~?x(\d+)\Z")
_INT = re.compile(r"[+-]?\d+\Z")
_HEADER_VARS = re.compile(r"#variable=\s*(\d+)")
_OFFSET = re.compile(r"\*\s*objective offset\s+([+-]?\d+)\s*\Z")


class OpbParseError(ValueError):
    def __init__(self, msg, line, col=1):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


def _tokens(text, start):
    """Split on whitespace, keeping 1-based column numbers."""
    return [(m.group(), start + m.start() + 1) for m in re.finditer(r"\S+", text)]


def _parse_terms(toks, lineno):
    """Parse ``<int> <lit>`` pairs; returns list of (coef, var number, negated)."""
    terms = []
    i = 0
    while i < len(toks):
        tok, col = toks[i]
        if not _INT.match(tok):
            raise OpbParseError(f"expected integer coefficient, got {tok!r}", lineno, col)
        if i + 1 >= len(toks):
            raise OpbParseError("coefficient without variable", lineno, col)
        vtok, vcol = toks[i + 1]
        m = _VAR.match(vtok)
        if not m:
            raise OpbParseError(f"variable token must match x<digits>, got {vtok!r}", lineno, vcol)
        num = int(m.group(1))
        if num < 1:
            raise OpbParseError("variable numbers start at 1", lineno, vcol)
        terms.append((int(tok), num, vtok.startswith("~")))
        i += 2
    return terms


def parse(text) -> Problem:
    """Parse OPB text into a :class:`Problem`.

    Variables ``x1..xN`` map to indices ``0..N-1`` over the union of the
    header's ``#variable=`` count and every name that occurs, sorted by
    number.  Constraint order follows the file; an ``=`` line contributes its
    ``>=`` half followed by its ``<=`` half.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise OpbParseError(f"invalid UTF-8: {e.reason}", 1, e.start + 1) from None
    declared = 0
    offset = 0
    objective_raw = None
    rows = []  # (terms, relation, rhs)
    seen = set()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            m = _HEADER_VARS.search(line)
            if m:
                declared = max(declared, int(m.group(1)))
            m = _OFFSET.match(line)
            if m:
                offset = int(m.group(1))
            continue
        lead = len(raw) - len(raw.lstrip())
        if not line.endswith(";"):
            raise OpbParseError("unterminated line (missing ';')", lineno, len(raw.rstrip()) + 1)
        body = line[:-1]
        if body.count(";"):
            raise OpbParseError("more than one ';' on a line", lineno, lead + body.index(";") + 1)
        if body.startswith("min:"):
            if objective_raw is not None:
                raise OpbParseError("duplicate objective", lineno, lead + 1)
            toks = _tokens(body[4:], lead + 4)
            objective_raw = _parse_terms(toks, lineno)
            seen.update(num for _, num, _ in objective_raw)
            continue
        toks = _tokens(body, lead)
        rel_pos = [k for k, (t, _) in enumerate(toks) if t in (">=", "<=", "=")]
        if len(rel_pos) != 1:
            raise OpbParseError("expected exactly one relation (>=, <=, =)", lineno, lead + 1)
        k = rel_pos[0]
        if k != len(toks) - 2:
            col = toks[k + 1][1] if k + 1 < len(toks) else toks[k][1]
            raise OpbParseError("expected a single integer after the relation", lineno, col)
        rhs_tok, rhs_col = toks[-1]
        if not _INT.match(rhs_tok):
            raise OpbParseError(f"non-integer right-hand side {rhs_tok!r}", lineno, rhs_col)
        terms = _parse_terms(toks[:k], lineno)
        seen.update(num for _, num, _ in terms)
        rows.append((terms, toks[k][0], int(rhs_tok)))

    numbers = sorted(set(range(1, declared + 1)) | seen)
    index = {num: i for i, num in enumerate(numbers)}
    names = tuple(f"x{num}" for num in numbers)

    def lits(terms):
        return [(a, -(index[num] + 1) if neg else index[num] + 1) for a, num, neg in terms]

    constraints = []
    equalities = []
    for terms, rel, rhs in rows:
        c = normalize(lits(terms), rel, rhs)
        if isinstance(c, Equality):
            equalities.append((len(constraints), len(constraints) + 1))
            constraints.extend((c.geq, c.leq))
        else:
            constraints.append(c)

    objective = None
    if objective_raw is not None:
        coefs, const = _collect(lits(objective_raw))
        objective = Objective.from_dict(coefs, const + offset)
    return Problem(names, tuple(constraints), objective, tuple(equalities))


def read(path) -> Problem:
    with open(path, "rb") as f:
        return parse(f.read())


def _signed_terms(coefs, names):
    return " ".join(f"{coefs[v]:+d} {names[v]}" for v in sorted(coefs) if coefs[v])


def write(p: Problem) -> str:
    """Canonical OPB text for ``p``; equality pairs are written back as ``=``."""
    leq_halves = {leq for _, leq in p.equalities}
    geq_halves = {geq for geq, _ in p.equalities}
    n_lines = len(p.constraints) - len(leq_halves)
    out = [f"* #variable= {p.n_vars} #constraint= {n_lines}"]
    if p.objective is not None:
        coefs = p.objective.as_dict()
        body = _signed_terms(coefs, p.names)
        out.append(f"min: {body} ;" if body else "min: ;")
        if p.objective.offset:
            out.append(f"* objective offset {p.objective.offset}")
    for i, c in enumerate(p.constraints):
        if i in leq_halves:
            continue
        coefs, rhs = c.linear()
        rel = "=" if i in geq_halves else ">="
        body = _signed_terms(coefs, p.names)
        out.append(f"{body} {rel} {rhs} ;" if body else f"{rel} {rhs} ;")
    return "\n".join(out) + "\n"
