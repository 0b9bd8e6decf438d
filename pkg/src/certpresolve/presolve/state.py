"""Presolve state: rows backed by certificate IDs and the shared reduction recipes.

Each row of the working problem is a live core constraint in the proof
writer's mirror database (two of them for an equality, geq half first).  The
row's constraint is whatever the emitted derivation evaluates to, so the
presolver and the checker can never disagree about it.
"""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .. import engine
from ..model import FALSE, Constraint, Objective, Problem, lit_name, normalize, restrict
from .postsolve import Fixed, RowDeleted, Substituted

DUAL_KINDS = frozenset({"dual_fixing", "dominance", "advanced_dominance", "singleton_dual"})


class PresolveError(RuntimeError):
    pass


@dataclass
class Row:
    geq: int
    leq: int | None = None  # set for equalities

    @property
    def is_eq(self) -> bool:
        return self.leq is not None

    def halves(self):
        return (self.geq,) if self.leq is None else (self.geq, self.leq)


@dataclass
class Transaction:
    kind: str
    steps: int = 0
    bytes: int = 0
    postsolve: list = field(default_factory=list)
    rows_removed: list = field(default_factory=list)
    rows_added: list = field(default_factory=list)
    fixed: dict = field(default_factory=dict)
    substituted: list = field(default_factory=list)

    @property
    def dual(self) -> bool:
        return self.kind in DUAL_KINDS


def _mul(tokens, k):
    if k != 1:
        tokens.extend((k, "*"))
    return tokens


def _lin_nnz(c: Constraint) -> int:
    return len(c.terms)


class State:
    def __init__(self, problem: Problem, writer, config, on_transaction=None):
        self.problem = problem
        self.writer = writer
        self.config = config
        self.on_transaction = on_transaction
        self.names = problem.names
        self.rows: dict = {}
        self.cols: dict = {}
        self.fixed: dict = {}
        self.substituted: dict = {}
        self.postsolve: list = []
        self.equations: list = []  # extra constraints defining eliminated vars
        self.transactions: list = []
        self.infeasible = False
        self.linked = set()
        self.dominated = set()
        self.deadline = None
        self._txn = None
        paired = {}
        for g, l in problem.equalities:
            paired[g] = l
        skip = set(paired.values())
        for i in range(len(problem.constraints)):
            if i in skip:
                continue
            if i in paired:
                self._attach(Row(i + 1, paired[i] + 1))
            else:
                self._attach(Row(i + 1))

    # -- basic access

    def con(self, cid) -> Constraint:
        return self.writer.db.get(cid)

    @property
    def objective(self) -> Objective | None:
        return self.writer.db.objective

    def lin(self, row: Row):
        return self.con(row.geq).linear()

    def row_vars(self, row: Row):
        return self.con(row.geq).variables()

    def sorted_rows(self):
        return sorted(self.rows.items())

    def n(self, v) -> str:
        return lit_name(v, self.names)

    def out_of_time(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline

    def _attach(self, row: Row):
        self.rows[row.geq] = row
        for v in self.con(row.geq).variables():
            self.cols.setdefault(v, set()).add(row.geq)
        if self._txn is not None:
            self._txn.rows_added.append(row.geq)

    def _detach(self, key) -> Row:
        row = self.rows.pop(key)
        for v in self.con(row.geq).variables():
            s = self.cols.get(v)
            if s is not None:
                s.discard(key)
                if not s:
                    del self.cols[v]
        if self._txn is not None:
            self._txn.rows_removed.append(key)
        return row

    def add_row(self, geq, leq=None) -> Row:
        row = Row(geq, leq)
        self._attach(row)
        return row

    def active_vars(self):
        vs = set(self.cols)
        if self.objective is not None:
            vs.update(v for _, v in self.objective.terms)
        return sorted(vs)

    # -- transactions

    @contextmanager
    def transaction(self, kind):
        if self._txn is not None:
            yield self._txn
            return
        w = self.writer
        txn = Transaction(kind)
        self._txn = txn
        steps0, bytes0, post0 = w.n_steps, w.total_bytes, len(self.postsolve)
        try:
            yield txn
            self.tidy()
        finally:
            self._txn = None
        txn.steps = w.n_steps - steps0
        txn.bytes = w.total_bytes - bytes0
        txn.postsolve = self.postsolve[post0:]
        self.transactions.append(txn)
        if self.on_transaction is not None:
            self.on_transaction(self, txn)

    def record(self, rec):
        self.postsolve.append(rec)
        if self._txn is not None:
            if isinstance(rec, Fixed):
                self._txn.fixed[rec.var] = rec.value
            elif isinstance(rec, Substituted):
                self._txn.substituted.append(rec.var)

    # -- row rewriting

    def rewrite_row(self, key, fn):
        """Replace each half ``h`` by ``fn(h)`` (None when the half is gone)."""
        row = self._detach(key)
        new = [fn(h) for h in row.halves()]
        kept = [h for h in new if h is not None]
        if not kept:
            self.record(RowDeleted(key))
            return None
        if len(kept) == 2:
            return self.add_row(kept[0], kept[1])
        return self.add_row(kept[0])

    def delete_row(self, key):
        row = self._detach(key)
        for h in row.halves():
            self.writer.delc(h)
        self.record(RowDeleted(key))

    def replace_half(self, h, tokens, inverse):
        """Derive ``tokens``, move it to the core and delete ``h`` by rederiving it.

        ``inverse`` builds the subproof tokens from the new ID.
        """
        w = self.writer
        new = w.pol(tokens)
        w.core(new)
        w.delc(h, subproof=[inverse(new)])
        return new

    # -- clean-up

    def tidy(self):
        """Drop tautological halves and certify infeasibility on a contradiction."""
        if self.infeasible:
            return
        for key, row in self.sorted_rows():
            if any(self.con(h).is_contradiction() for h in row.halves()):
                self.derive_infeasible()
                return
            if any(self.con(h).is_tautology() for h in row.halves()):
                w = self.writer

                def drop(h):
                    if self.con(h).is_tautology():
                        w.delc(h)
                        return None
                    return h
                self.rewrite_row(key, drop)

    def derive_infeasible(self):
        w = self.writer
        with self.transaction("infeasible"):
            fid = w.rup(FALSE)
            w.core(fid)
            for key in sorted(self.rows):
                row = self._detach(key)
                for h in row.halves():
                    w.delc(h)
            self.infeasible = True
            self.false_id = fid

    # -- fixing

    def canonical_unit(self, cid):
        """Return an ID holding ``+1 l >= 1`` for a single-literal core constraint ``cid``."""
        c = self.con(cid)
        (a, l), = c.terms
        if a == 1 and c.degree == 1:
            return cid, l
        w = self.writer
        unit = w.pol([cid, a, "d"], tag="unit")
        w.core(unit)
        w.delc(cid)
        return unit, l

    def fix(self, var, value, unit):
        """Fix ``var`` to ``value`` given a live core unit ``+1 l >= 1`` with ``l`` true at ``value``."""
        w = self.writer
        true_lit = var + 1 if value else -(var + 1)
        assert self.con(unit).terms == ((1, true_lit),) and self.con(unit).degree == 1

        def fix_half(h):
            c = self.con(h)
            t = c.coef_of(var)
            if t is None:
                return h
            a, l = t
            if restrict(c, {var: value}).is_tautology():
                w.delc(h)
                return None
            if l == true_lit:
                toks = _mul([h, self.n(-l)], a) + ["+"]
                return self.replace_half(h, toks, lambda new: _mul([new, unit], a) + ["+"])
            toks = _mul([h, unit], a) + ["+"]
            return self.replace_half(h, toks, lambda new: _mul([new, self.n(l)], a) + ["+"])

        for key in sorted(self.cols.get(var, ())):
            self.rewrite_row(key, fix_half)
        f = self.objective
        if f is not None and var in f.as_dict():
            coefs = f.as_dict()
            c = coefs.pop(var)
            w.obju(Objective.from_dict(coefs, f.offset + c * value))
        w.delc(unit, {var: bool(value)})
        self.fixed[var] = value
        self.equations.append(Constraint(((1, true_lit),), 1))
        self.record(Fixed(var, value))

    def fix_from_row(self, key, kind):
        """A row that is a single literal becomes a fixing."""
        with self.transaction(kind):
            row = self._detach(key)
            unit, l = self.canonical_unit(row.geq)
            self.record(RowDeleted(key))
            self.fix(abs(l) - 1, 1 if l > 0 else 0, unit)

    # -- substitution

    def substitute(self, key, var, up_evidence, lo_evidence, keep_aux=False):
        """Eliminate ``var`` (coefficient +-1) using equality row ``key``.

        ``up_evidence``/``lo_evidence`` are row half IDs whose aggregated
        form refutes the negated auxiliary constraint, or None when that
        auxiliary is a tautology.  With ``keep_aux`` the non-trivial
        auxiliaries stay as rows instead (slack treatment).
        """
        w = self.writer
        erow = self.rows[key]
        coefs, rhs = self.lin(erow)
        e = coefs[var]
        if abs(e) != 1:
            raise PresolveError("substitution needs a unit coefficient")
        pos = var + 1
        p_half, n_half = (erow.geq, erow.leq) if e > 0 else (erow.leq, erow.geq)
        assert self.con(p_half).coef_of(var) == (1, pos)
        assert self.con(n_half).coef_of(var) == (1, -pos)
        aux_up = w.pol([p_half, self.n(-pos), "+"])
        w.core(aux_up)
        aux_lo = w.pol([n_half, self.n(pos), "+"])
        w.core(aux_lo)
        self._detach(key)
        renamed = {}

        def agg_half(h):
            c = self.con(h)
            t = c.coef_of(var)
            if t is None:
                return h
            a, l = t
            partner, other = (n_half, p_half) if l > 0 else (p_half, n_half)
            new = self.replace_half(h, _mul([h, partner], a) + ["+"],
                                    lambda new: _mul([new, other], a) + ["+"])
            renamed[h] = (new, a)
            return new

        for k in sorted(self.cols.get(var, ())):
            self.rewrite_row(k, agg_half)

        f = self.objective
        if f is not None and var in f.as_dict():
            fc = f.as_dict()
            c = fc.pop(var)
            # var = (rhs - sum coefs_k x_k) / e with e = +-1
            for k, ck in coefs.items():
                if k != var:
                    fc[k] = fc.get(k, 0) - c * ck * e
            w.obju(Objective.from_dict(fc, f.offset + c * rhs * e))
        w.delc(n_half, {var: False})
        w.delc(p_half, {var: True})

        kept = []
        for aux, ev in ((aux_lo, lo_evidence), (aux_up, up_evidence)):
            if self.con(aux).is_tautology():
                w.delc(aux)
            elif ev is not None:
                new, a = renamed[ev]
                w.delc(aux, subproof=[_mul([new, -1], a) + ["+"]])
            elif keep_aux:
                kept.append(aux)
            else:
                raise PresolveError("auxiliary constraint without evidence")
        for aux in kept:
            self.add_row(aux)

        rest = tuple((k, ck) for k, ck in sorted(coefs.items()) if k != var)
        self.substituted[var] = key
        terms = [(ck, k + 1) for k, ck in coefs.items()]
        eq = normalize(terms, "=", rhs)
        self.equations.extend((eq.geq, eq.leq))
        self.record(RowDeleted(key))
        self.record(Substituted(var, rest, rhs, e))

    def simulate_evidence(self, key, var):
        """Find (up, lo) evidence half IDs for substituting ``var`` via equality ``key``.

        Each entry is None when the auxiliary is a tautology, a half ID when
        that row refutes the negated auxiliary, or False when nothing does.
        """
        erow = self.rows[key]
        e = self.lin(erow)[0][var]
        pos = var + 1
        p_half, n_half = (erow.geq, erow.leq) if e > 0 else (erow.leq, erow.geq)
        P, N = self.con(p_half), self.con(n_half)
        aux_up = engine.add(P, engine.axiom(-pos))
        aux_lo = engine.add(N, engine.axiom(pos))
        up = None if aux_up.is_tautology() else False
        lo = None if aux_lo.is_tautology() else False
        if up is False or lo is False:
            nu, nl = engine.negate(aux_up) if up is False else None, engine.negate(aux_lo) if lo is False else None
            for k in sorted(self.cols.get(var, ())):
                if k == key:
                    continue
                for h in self.rows[k].halves():
                    a, l = self.con(h).coef_of(var)
                    if l < 0 and up is False:
                        agg = engine.add(self.con(h), engine.multiply(P, a))
                        if engine.add(agg, engine.multiply(nu, a)).is_contradiction():
                            up = h
                    elif l > 0 and lo is False:
                        agg = engine.add(self.con(h), engine.multiply(N, a))
                        if engine.add(agg, engine.multiply(nl, a)).is_contradiction():
                            lo = h
        return up, lo

    # -- results

    def reduced_problem(self) -> Problem:
        cons = []
        eqs = []
        if self.infeasible:
            return Problem(self.names, (FALSE,), self.objective, ())
        for _, row in self.sorted_rows():
            if row.is_eq:
                eqs.append((len(cons), len(cons) + 1))
                cons.extend((self.con(row.geq), self.con(row.leq)))
            else:
                cons.append(self.con(row.geq))
        return Problem(self.names, tuple(cons), self.objective, tuple(eqs))

    def lifted_problem(self) -> Problem:
        """Current rows plus the equations that define every eliminated variable."""
        red = self.reduced_problem()
        return Problem(self.names, red.constraints + tuple(self.equations), red.objective, red.equalities)

    def check_mirror(self):
        """The writer's live core must be exactly the row halves."""
        halves = set()
        for row in self.rows.values():
            halves.update(row.halves())
        core = set(self.writer.db.core)
        if self.infeasible:
            halves.add(self.false_id)
        if core != halves:
            raise PresolveError(f"mirror core {sorted(core)} != rows {sorted(halves)}")
