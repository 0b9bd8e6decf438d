"""Independent certificate checker.

Replays a certificate against the original instance, keeping a core set
(initialized with the input constraints) and a derived set.  Every step is
validated before it takes effect; the first failing step rejects the whole
certificate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import engine
from .model import (
    Objective,
    apply_substitution,
    negate,
    objective_constraint,
    restrict,
)
from .proof import (
    CertificateParseError,
    Comment,
    Delc,
    LoadFormula,
    MirrorDB,
    MoveToCore,
    ObjuDiff,
    ObjuNew,
    Pol,
    Red,
    Rup,
    StepParser,
    diff_objective,
)


class Rejection(Exception):
    def __init__(self, rule, reason):
        super().__init__(f"{rule}: {reason}")
        self.rule = rule
        self.reason = reason


@dataclass
class Verdict:
    accepted: bool
    step_index: int | None = None  # 1-based count of steps, comments excluded
    line: int | None = None
    rule: str | None = None
    reason: str | None = None
    stats: dict = field(default_factory=dict)
    core: list = field(default_factory=list)  # final live core constraints
    objective: Objective | None = None

    def summary(self) -> str:
        if self.accepted:
            return f"accepted ({self.stats.get('steps', 0)} steps)"
        return f"rejected at step {self.step_index} (line {self.line}, {self.rule}): {self.reason}"


def _touches(c, omega) -> bool:
    return any(abs(l) - 1 in omega for _, l in c.terms)


def _objective_touched(f, omega) -> bool:
    return f is not None and any(v in omega for _, v in f.terms)


class _GoalContext:
    """Premises plus the scratch constraints a subproof may reference."""

    def __init__(self, premises, scratch, base_id):
        self.premises = dict(premises)
        self.scratch = list(scratch)
        self.base_id = base_id
        self._fix = None
        self._by_var = None

    def items(self):
        out = list(self.premises.items())
        out.extend((self.base_id + i, c) for i, c in enumerate(self.scratch))
        return out

    @property
    def fixpoint(self):
        if self._fix is None:
            self._fix = engine.propagate(self.items())
        return self._fix

    def by_var(self):
        if self._by_var is None:
            idx = {}
            for cid, c in self.items():
                for _, l in c.terms:
                    idx.setdefault(abs(l) - 1, []).append(cid)
            self._by_var = idx
        return self._by_var

    def lookup(self, cid):
        if cid in self.premises:
            return self.premises[cid]
        k = cid - self.base_id
        if 0 <= k < len(self.scratch):
            return self.scratch[k]
        return None

    def auto(self, goal) -> bool:
        if goal.is_tautology():
            return True
        fp = self.fixpoint
        if fp.conflict is not None:
            return True
        rho = fp.assignment
        rg = restrict(goal, rho)
        if rg.is_tautology():
            return True
        seen = set()
        idx = self.by_var()
        for _, l in rg.terms:
            for cid in idx.get(abs(l) - 1, ()):
                if cid in seen:
                    continue
                seen.add(cid)
                if engine.implies(restrict(self.lookup(cid), rho), rg):
                    return True
        return engine.rup_check(self.items(), goal, rho)


class Checker:
    """Stateful verifier; feed steps with :meth:`step` or a whole file with :meth:`check`."""

    def __init__(self, problem):
        self.problem = problem
        self.var_index = {n: i for i, n in enumerate(problem.names)}
        self.db = MirrorDB(problem.constraints, problem.objective)
        self.loaded = False
        self.stats = {"steps": 0, "by_kind": {}, "propagations": 0, "max_db": len(problem.constraints)}

    # -- database views

    def core_items(self):
        return self.db.core_items()

    def live_items(self):
        return sorted(self.db.live())

    def final_core(self):
        return [c for _, c in self.core_items()]

    # -- goal machinery

    def _run_block(self, ctx, steps, goal):
        """Execute a subproof block; it must end in a constraint that closes ``goal``."""
        local = {}
        next_id = ctx.base_id + len(ctx.scratch)

        def lookup(n):
            cid = next_id + n if n < 0 else n
            c = local.get(cid)
            if c is None:
                c = ctx.lookup(cid)
            if c is None:
                raise KeyError(n)
            return c

        last = None
        for s in steps:
            if isinstance(s, Pol):
                try:
                    c = engine.eval_polish(s.tokens, lookup, self.var_index)
                except engine.DerivationError as e:
                    raise Rejection("subproof", str(e)) from None
            elif isinstance(s, Rup):
                view = ctx.items() + list(local.items())
                self.stats["propagations"] += 1
                if not engine.rup_check(view, s.constraint):
                    raise Rejection("subproof", f"rup {s.constraint} does not propagate to a conflict")
                c = s.constraint
            else:
                raise Rejection("subproof", f"{type(s).__name__} not allowed in a subproof")
            local[next_id] = c
            next_id += 1
            last = c
        if last is None:
            raise Rejection("subproof", "empty subproof block")
        if last.is_contradiction() or engine.implies(last, goal):
            return
        if engine.propagate([(0, last), (1, negate(goal))]).conflict is not None:
            return
        raise Rejection("subproof", f"last derived constraint {last} does not close goal {goal}")

    def _discharge(self, rule, goals, ctx, subproofs):
        """``goals`` maps label -> goal constraint; blocks bind by label."""
        blocks = {}
        for sp in subproofs or ():
            label = sp.label or "#1"
            if label in blocks:
                raise Rejection(rule, f"two subproofs for goal {label}")
            if label not in goals:
                raise Rejection(rule, f"subproof for unknown goal {label}")
            blocks[label] = sp.steps
        for label, goal in goals.items():
            if label in blocks:
                sub = _GoalContext(ctx.premises.items(), ctx.scratch + [negate(goal)], ctx.base_id)
                self._run_block(sub, blocks[label], goal)
            else:
                self.stats["propagations"] += 1
                if not ctx.auto(goal):
                    raise Rejection(rule, f"proof goal {label} ({goal}) not implied")

    def _redundance(self, rule, c, omega, subproofs, premises, goal_pool):
        ctx = _GoalContext(premises, [negate(c)], self.db.next_id)
        goals = {}
        for cid, d in goal_pool:
            if _touches(d, omega):
                g = apply_substitution(d, omega)
                if g != d:
                    goals[str(cid)] = g
        goals["#1"] = apply_substitution(c, omega)
        f = self.db.objective
        if _objective_touched(f, omega):
            goals["#2"] = objective_constraint(f, apply_substitution(f, omega))
        self._discharge(rule, goals, ctx, subproofs)

    # -- rules

    def step(self, s):
        db = self.db
        if isinstance(s, Comment):
            return
        kind = type(s).__name__
        by_kind = self.stats["by_kind"]
        by_kind[kind] = by_kind.get(kind, 0) + 1
        self.stats["steps"] += 1
        if isinstance(s, LoadFormula):
            if self.loaded:
                raise Rejection("f", "formula loaded twice")
            if s.m != len(self.problem.constraints):
                raise Rejection("f", f"instance has {len(self.problem.constraints)} constraints, certificate claims {s.m}")
            self.loaded = True
            return
        if not self.loaded:
            raise Rejection(kind, "step before 'f' line")
        if isinstance(s, Pol):
            try:
                c = engine.eval_polish(s.tokens, db.get, self.var_index)
            except engine.DerivationError as e:
                raise Rejection("pol", str(e)) from None
            db.add(c)
        elif isinstance(s, Rup):
            self.stats["propagations"] += 1
            if not engine.rup_check(self.live_items(), s.constraint):
                raise Rejection("rup", f"{s.constraint} does not propagate to a conflict")
            db.add(s.constraint)
        elif isinstance(s, Red):
            omega = dict(s.witness)
            live = self.live_items()
            self._redundance("red", s.constraint, omega, s.subproofs, live, live)
            db.add(s.constraint)
        elif isinstance(s, MoveToCore):
            if not db.is_live(s.cid):
                raise Rejection("core", f"constraint {s.cid} is not live")
            if db.is_core(s.cid):
                raise Rejection("core", f"constraint {s.cid} is already in the core")
            db.core.add(s.cid)
        elif isinstance(s, Delc):
            if not db.is_live(s.cid):
                raise Rejection("delc", f"constraint {s.cid} is not live")
            if db.is_core(s.cid):
                c = db.constraints[s.cid]
                rest = [(cid, d) for cid, d in self.core_items() if cid != s.cid]
                self._redundance("delc", c, dict(s.witness), s.subproofs, rest, rest)
            db.delete(s.cid)
        elif isinstance(s, (ObjuNew, ObjuDiff)):
            f = db.objective
            if f is None:
                raise Rejection("obju", "instance has no objective")
            new = s.objective if isinstance(s, ObjuNew) else diff_objective(f, s.terms, s.constant)
            goals = {"#1": objective_constraint(f, new), "#2": objective_constraint(new, f)}
            ctx = _GoalContext(self.core_items(), [], db.next_id)
            self._discharge("obju", goals, ctx, s.subproofs)
            db.objective = new
        else:
            raise Rejection(kind, "unsupported step")
        n = len(db.constraints)
        if n > self.stats["max_db"]:
            self.stats["max_db"] = n

    def check(self, source, on_step=None) -> Verdict:
        """Check a whole certificate; ``on_step(checker, index)`` runs after each accepted step."""
        t0 = time.perf_counter()
        index = 0
        lineno = None
        s = None
        try:
            for lineno, s in StepParser(source, self.var_index):
                if not isinstance(s, Comment):
                    index += 1
                self.step(s)
                if on_step is not None and not isinstance(s, Comment):
                    on_step(self, index)
            if not self.loaded:
                raise Rejection("f", "missing 'f' line")
        except Rejection as r:
            return self._verdict(False, index, lineno, r.rule, r.reason, t0)
        return self._verdict(True, None, None, None, None, t0)

    def _verdict(self, ok, index, line, rule, reason, t0):
        stats = dict(self.stats, seconds=time.perf_counter() - t0)
        return Verdict(ok, index, line, rule, reason, stats, self.final_core(), self.db.objective)


def check(problem, certificate, on_step=None) -> Verdict:
    """Check ``certificate`` (text, bytes or line iterable) against ``problem``.

    Raises :class:`CertificateParseError` on malformed input; semantic
    failures come back as a rejected :class:`Verdict`.
    """
    return Checker(problem).check(certificate, on_step)


__all__ = ["Checker", "Verdict", "Rejection", "check", "CertificateParseError"]
