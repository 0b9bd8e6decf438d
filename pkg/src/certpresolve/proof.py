"""Certificate steps, the text serializer/parser and a streaming writer.

Certificate layout::

    pseudo-Boolean proof version 2.0
    * <free-form comment lines>
    f <m>
    <steps>
    end pseudo-Boolean proof

Top-level steps::

    pol <rpn tokens> ;
    rup <constraint> ;
    red <constraint> ; <witness> [; begin ... end]
    core id <id>
    delc <id> [; <witness> [; begin ... end]]
    obju new <signed terms> [<constant>] ; [begin ... end]
    obju diff <signed terms> [<constant>] ; [begin ... end]

A witness is a list of ``<var> <image>`` pairs, optionally written with an
arrow (``x1 -> 0``); images are ``0``, ``1`` or a literal.  A subproof block
holds ``pol``/``rup`` steps directly (bound to the main goal) or a list of
``proofgoal <label>`` ... ``end`` blocks, where the label is a constraint ID,
``#1`` (the main goal) or ``#2`` (the objective goal).

Inside a block, constraint IDs past the current counter are scratch: the
first is the negation of the constraint under test and the second the
negated goal, so ``-1`` refers to the negated goal when a block starts.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass

from . import engine
from .model import Constraint, Objective, _collect, lit_name, normalize, var_name

HEADER = "pseudo-Boolean proof version 2.0"
FOOTER = "end pseudo-Boolean proof"
INDENT = "   "

_INT = re.compile(r"[+-]?\d+\Z")


class CertificateParseError(ValueError):
    def __init__(self, msg, line):
        super().__init__(f"line {line}: {msg}")
        self.msg = msg
        self.line = line


class WriterError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# step algebra

@dataclass(frozen=True)
class Pol:
    tokens: tuple


@dataclass(frozen=True)
class Rup:
    constraint: Constraint


@dataclass(frozen=True)
class Subproof:
    label: str | None
    steps: tuple


@dataclass(frozen=True)
class Red:
    constraint: Constraint
    witness: tuple = ()  # ((var, image), ...)
    subproofs: tuple | None = None


@dataclass(frozen=True)
class Delc:
    cid: int
    witness: tuple = ()
    subproofs: tuple | None = None


@dataclass(frozen=True)
class MoveToCore:
    cid: int


@dataclass(frozen=True)
class ObjuNew:
    objective: Objective
    subproofs: tuple | None = None


@dataclass(frozen=True)
class ObjuDiff:
    terms: tuple  # ((signed coef, literal), ...)
    constant: int = 0
    subproofs: tuple | None = None


@dataclass(frozen=True)
class Comment:
    text: str


@dataclass(frozen=True)
class LoadFormula:
    m: int


CREATES_ID = (Pol, Rup, Red)


def witness_dict(w) -> dict:
    return dict(w)


def diff_objective(f: Objective | None, terms, constant) -> Objective:
    coefs, const = _collect(terms)
    base = f.as_dict() if f is not None else {}
    for v, c in coefs.items():
        base[v] = base.get(v, 0) + c
    offset = (f.offset if f is not None else 0) + const + constant
    return Objective.from_dict(base, offset)


def objective_delta(old: Objective | None, new: Objective):
    """Signed literal terms plus constant whose sum turns ``old`` into ``new``.

    A removed or lowered term ``-d x`` is written ``+d ~x`` when the pending
    constant can absorb it, which is how a fixing to 1 reads as a single term.
    """
    a = old.as_dict() if old is not None else {}
    b = new.as_dict()
    rem = new.offset - (old.offset if old is not None else 0)
    terms = []
    for v in sorted(set(a) | set(b)):
        d = b.get(v, 0) - a.get(v, 0)
        if d == 0:
            continue
        if d < 0 and rem >= -d:
            terms.append((-d, -(v + 1)))
            rem += d
        elif d > 0 and rem <= -d:
            terms.append((-d, -(v + 1)))
            rem += d
        else:
            terms.append((d, v + 1))
    return tuple(terms), rem


# --------------------------------------------------------------------------
# serialization

def format_constraint(c: Constraint, names=None) -> str:
    return c.to_str(names)


def format_witness(w, names=None, arrow=False) -> str:
    parts = []
    for v, img in w:
        if type(img) is bool:
            s = "1" if img else "0"
        else:
            s = lit_name(img, names)
        parts.append(f"{var_name(v, names)} -> {s}" if arrow else f"{var_name(v, names)} {s}")
    return " ".join(parts)


def _format_terms(terms, constant, names):
    parts = [f"{a:+d} {lit_name(l, names)}" for a, l in terms]
    if constant:
        parts.append(str(constant))
    return " ".join(parts)


def _inner_lines(step, names):
    if isinstance(step, Pol):
        return "pol " + " ".join(step.tokens)
    if isinstance(step, Rup):
        return f"rup {format_constraint(step.constraint, names)} ;"
    raise WriterError(f"{type(step).__name__} is not allowed inside a subproof")


def _block_lines(subproofs, names):
    out = []
    for sp in subproofs:
        if sp.label is None:
            out.extend(INDENT + _inner_lines(s, names) for s in sp.steps)
        else:
            out.append(f"{INDENT}proofgoal {sp.label}")
            out.extend(INDENT * 2 + _inner_lines(s, names) for s in sp.steps)
            out.append(INDENT + "end")
    out.append("end")
    return out


def serialize(step, names=None) -> str:
    """Text of one top-level step (possibly several lines, no trailing newline)."""
    if isinstance(step, Pol):
        return "pol " + " ".join(step.tokens) + " ;"
    if isinstance(step, Rup):
        return f"rup {format_constraint(step.constraint, names)} ;"
    if isinstance(step, Red):
        head = f"red {format_constraint(step.constraint, names)} ; {format_witness(step.witness, names)}".rstrip()
        if step.subproofs is None:
            return head
        return "\n".join([head + " ; begin"] + _block_lines(step.subproofs, names))
    if isinstance(step, Delc):
        if step.subproofs is not None:
            w = format_witness(step.witness, names, arrow=True)
            head = f"delc {step.cid} ; {w} ; begin" if w else f"delc {step.cid} ; ; begin"
            return "\n".join([head] + _block_lines(step.subproofs, names))
        if step.witness:
            return f"delc {step.cid} ; {format_witness(step.witness, names, arrow=True)}"
        return f"delc {step.cid}"
    if isinstance(step, MoveToCore):
        return f"core id {step.cid}"
    if isinstance(step, (ObjuNew, ObjuDiff)):
        if isinstance(step, ObjuNew):
            terms = tuple((c, v + 1) for c, v in step.objective.terms)
            body = "obju new " + _format_terms(terms, step.objective.offset, names)
        else:
            body = "obju diff " + _format_terms(step.terms, step.constant, names)
        head = body.rstrip() + " ;"
        if step.subproofs is None:
            return head
        return "\n".join([head + " begin"] + _block_lines(step.subproofs, names))
    if isinstance(step, Comment):
        return f"* {step.text}" if step.text else "*"
    if isinstance(step, LoadFormula):
        return f"f {step.m}"
    raise WriterError(f"unknown step {step!r}")


def serialize_certificate(steps, names=None, m=None, comments=()) -> str:
    lines = [HEADER]
    lines.extend(serialize(Comment(c)) for c in comments)
    if m is not None:
        lines.append(f"f {m}")
    lines.extend(serialize(s, names) for s in steps)
    lines.append(FOOTER)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parsing

class _Lines:
    def __init__(self, source):
        if isinstance(source, bytes):
            source = source.decode("utf-8", errors="replace")
        if isinstance(source, str):
            source = io.StringIO(source)
        self._it = iter(source)
        self.lineno = 0
        self._peeked = None

    def next(self):
        if self._peeked is not None:
            p, self._peeked = self._peeked, None
            return p
        for raw in self._it:
            self.lineno += 1
            line = raw.strip()
            if line:
                return line
        return None


class StepParser:
    """Incremental certificate parser over text, bytes or a line iterable.

    Iterating yields ``(line number, step)``.  The header must come first and
    the footer last; anything after the footer is an error.
    """

    def __init__(self, source, var_index):
        self.lines = _Lines(source)
        self.var_index = var_index

    def error(self, msg):
        raise CertificateParseError(msg, self.lines.lineno)

    def __iter__(self):
        first = self.lines.next()
        if first != HEADER:
            self.error(f"expected header {HEADER!r}")
        while True:
            line = self.lines.next()
            if line is None:
                self.error("missing end marker")
            if line == FOOTER:
                if self.lines.next() is not None:
                    self.error("content after end marker")
                return
            lineno = self.lines.lineno
            yield lineno, self.parse_step(line)

    # -- pieces

    def _int(self, tok, what="integer"):
        if not _INT.match(tok):
            self.error(f"expected {what}, got {tok!r}")
        return int(tok)

    def _lit(self, tok):
        l = engine.parse_literal(tok, self.var_index)
        if l is None:
            self.error(f"unknown literal {tok!r}")
        return l

    def _terms(self, toks):
        """Signed ``<coef> <lit>`` pairs with an optional trailing constant."""
        terms = []
        constant = 0
        i = 0
        while i < len(toks):
            if i == len(toks) - 1:
                constant = self._int(toks[i], "constant")
                break
            terms.append((self._int(toks[i], "coefficient"), self._lit(toks[i + 1])))
            i += 2
        return terms, constant

    def _constraint(self, toks):
        if len(toks) < 2 or toks[-2] != ">=":
            self.error("constraint must end with '>= <degree>'")
        degree = self._int(toks[-1], "degree")
        body = toks[:-2]
        if len(body) % 2:
            self.error("dangling coefficient in constraint")
        terms, _ = self._terms(body)
        return normalize(terms, ">=", degree)

    def _witness(self, toks):
        w = []
        seen = set()
        i = 0
        while i < len(toks):
            v = engine.parse_literal(toks[i], self.var_index)
            if v is None or v < 0:
                self.error(f"witness key must be a variable, got {toks[i]!r}")
            j = i + 1
            if j < len(toks) and toks[j] == "->":
                j += 1
            if j >= len(toks):
                self.error("witness variable without image")
            img_tok = toks[j]
            if img_tok in ("0", "1"):
                img = img_tok == "1"
            else:
                img = self._lit(img_tok)
            if v - 1 in seen:
                self.error(f"variable {toks[i]} mapped twice in witness")
            seen.add(v - 1)
            w.append((v - 1, img))
            i = j + 1
        return tuple(w)

    def _block(self):
        """Lines up to the matching ``end``; returns a tuple of Subproofs."""
        anon = []
        labeled = []
        while True:
            line = self.lines.next()
            if line is None:
                self.error("unterminated subproof")
            if line == "end":
                break
            toks = line.split()
            if toks[0] == "proofgoal":
                if len(toks) != 2:
                    self.error("proofgoal takes one label")
                label = toks[1]
                if not (label in ("#1", "#2") or _INT.match(label)):
                    self.error(f"bad proofgoal label {label!r}")
                steps = []
                while True:
                    inner = self.lines.next()
                    if inner is None:
                        self.error("unterminated proofgoal")
                    if inner == "end":
                        break
                    steps.append(self._inner(inner.split()))
                labeled.append(Subproof(label, tuple(steps)))
            else:
                anon.append(self._inner(toks))
        if anon and labeled:
            self.error("cannot mix anonymous steps with proofgoal blocks")
        return tuple(labeled) if labeled else (Subproof(None, tuple(anon)),)

    def _inner(self, toks):
        if toks[-1] == ";":
            toks = toks[:-1]
        if toks[0] == "pol":
            if len(toks) < 2:
                self.error("empty pol")
            return Pol(tuple(toks[1:]))
        if toks[0] == "rup":
            return Rup(self._constraint(toks[1:]))
        self.error(f"{toks[0]!r} is not allowed inside a subproof")

    @staticmethod
    def _split_semis(toks):
        parts = [[]]
        for t in toks:
            if t == ";":
                parts.append([])
            else:
                parts[-1].append(t)
        return parts

    def parse_step(self, line):
        if line.startswith("*"):
            return Comment(line[1:].strip())
        # a ';' glued to the previous token still separates
        line = re.sub(r";", " ; ", line)
        toks = line.split()
        kw = toks[0]
        rest = toks[1:]
        if kw == "f":
            if len(rest) != 1:
                self.error("'f' takes the number of input constraints")
            return LoadFormula(self._int(rest[0]))
        if kw == "pol":
            parts = self._split_semis(rest)
            if len(parts) > 2 or (len(parts) == 2 and parts[1]) or not parts[0]:
                self.error("malformed pol step")
            return Pol(tuple(parts[0]))
        if kw == "rup":
            parts = self._split_semis(rest)
            if len(parts) != 2 or parts[1]:
                self.error("rup needs '<constraint> ;'")
            return Rup(self._constraint(parts[0]))
        if kw == "core":
            parts = self._split_semis(rest)
            if len(parts) > 2 or (len(parts) == 2 and parts[1]):
                self.error("malformed core step")
            t = parts[0]
            if len(t) != 2 or t[0] != "id":
                self.error("expected 'core id <n>'")
            return MoveToCore(self._int(t[1], "constraint ID"))
        if kw == "red":
            parts = self._split_semis(rest)
            if len(parts) not in (2, 3):
                self.error("red needs '<constraint> ; <witness>'")
            c = self._constraint(parts[0])
            w = self._witness(parts[1])
            sub = None
            if len(parts) == 3:
                if parts[2] != ["begin"]:
                    self.error("expected 'begin'")
                sub = self._block()
            return Red(c, w, sub)
        if kw == "delc":
            parts = self._split_semis(rest)
            if len(parts[0]) != 1:
                self.error("delc takes one constraint ID")
            cid = self._int(parts[0][0], "constraint ID")
            if len(parts) == 1:
                return Delc(cid)
            w = self._witness(parts[1])
            if len(parts) == 2:
                return Delc(cid, w)
            if len(parts) == 3 and parts[2] == ["begin"]:
                return Delc(cid, w, self._block())
            if len(parts) == 3 and parts[2] == []:
                return Delc(cid, w)
            self.error("malformed delc step")
        if kw == "obju":
            if not rest or rest[0] not in ("new", "diff"):
                self.error("obju needs 'new' or 'diff'")
            parts = self._split_semis(rest[1:])
            if len(parts) != 2 or parts[1] not in ([], ["begin"]):
                self.error("obju payload must end with ';'")
            terms, constant = self._terms(parts[0])
            sub = self._block() if parts[1] == ["begin"] else None
            if rest[0] == "new":
                coefs, const = _collect(terms)
                return ObjuNew(Objective.from_dict(coefs, const + constant), sub)
            return ObjuDiff(tuple(terms), constant, sub)
        self.error(f"unknown rule {kw!r}")


def parse_certificate(source, var_index) -> list:
    """All steps of a certificate (line numbers dropped)."""
    return [s for _, s in StepParser(source, var_index)]


# --------------------------------------------------------------------------
# streaming writer

class MirrorDB:
    """ID-indexed constraint store with core/derived membership and liveness.

    Only live constraints are kept; deleted IDs are remembered as a count so
    memory stays proportional to the live database.
    """

    def __init__(self, constraints=(), objective=None):
        self.constraints = {}
        self.core = set()
        self.next_id = 1
        self.objective = objective
        for c in constraints:
            self.constraints[self.next_id] = c
            self.core.add(self.next_id)
            self.next_id += 1

    def resolve(self, n: int) -> int:
        return self.next_id + n if n < 0 else n

    def get(self, n: int) -> Constraint:
        return self.constraints[self.resolve(n)]

    def is_live(self, cid) -> bool:
        return cid in self.constraints

    def is_core(self, cid) -> bool:
        return cid in self.core

    def add(self, c: Constraint) -> int:
        cid = self.next_id
        self.constraints[cid] = c
        self.next_id += 1
        return cid

    def delete(self, cid):
        del self.constraints[cid]
        self.core.discard(cid)

    def live(self):
        return self.constraints.items()

    def core_items(self):
        return [(cid, self.constraints[cid]) for cid in sorted(self.core)]


class ProofWriter:
    """Serialize steps as they are emitted while mirroring the checker's database.

    ``out`` is a text stream (or None to skip serialization but keep the
    mirror, used when certificates are switched off).  Byte counts are kept
    per tag; the tag defaults to the rule keyword.
    """

    def __init__(self, out, problem, obju_mode="diff", comments=()):
        if obju_mode not in ("diff", "new"):
            raise WriterError(f"unknown obju mode {obju_mode!r}")
        self.out = out
        self.names = problem.names
        self.var_index = {n: i for i, n in enumerate(problem.names)}
        self.db = MirrorDB(problem.constraints, problem.objective)
        self._obju_mode = obju_mode
        self._obju_used = False
        self.closed = False
        self.bytes_by_tag: dict = {}
        self.steps_by_kind: dict = {}
        self.n_steps = 0
        self._write(HEADER, "header")
        for c in comments:
            self._write(serialize(Comment(c)), "comment")
        self._write(f"f {len(problem.constraints)}", "header")

    @property
    def obju_mode(self):
        return self._obju_mode

    @obju_mode.setter
    def obju_mode(self, mode):
        if self._obju_used and mode != self._obju_mode:
            raise WriterError("obju mode cannot change after an objective update")
        if mode not in ("diff", "new"):
            raise WriterError(f"unknown obju mode {mode!r}")
        self._obju_mode = mode

    def _write(self, text, tag):
        n = len(text.encode()) + 1
        self.bytes_by_tag[tag] = self.bytes_by_tag.get(tag, 0) + n
        if self.out is not None:
            self.out.write(text)
            self.out.write("\n")

    @property
    def total_bytes(self):
        return sum(self.bytes_by_tag.values())

    def emit(self, step, tag=None):
        """Append ``step``; returns the new ID for constraint-creating steps."""
        if self.closed:
            raise WriterError("certificate already closed")
        db = self.db
        cid = None
        kind = type(step).__name__
        if isinstance(step, Pol):
            c = engine.eval_polish(step.tokens, db.get, self.var_index)
            cid = db.add(c)
        elif isinstance(step, (Rup, Red)):
            cid = db.add(step.constraint)
        elif isinstance(step, MoveToCore):
            if not db.is_live(step.cid):
                raise WriterError(f"core id {step.cid}: not live")
            db.core.add(step.cid)
        elif isinstance(step, Delc):
            if not db.is_live(step.cid):
                raise WriterError(f"delc {step.cid}: not live")
            db.delete(step.cid)
        elif isinstance(step, ObjuNew):
            db.objective = step.objective
            self._obju_used = True
        elif isinstance(step, ObjuDiff):
            db.objective = diff_objective(db.objective, step.terms, step.constant)
            self._obju_used = True
        self._write(serialize(step, self.names), tag or kind)
        self.steps_by_kind[kind] = self.steps_by_kind.get(kind, 0) + 1
        self.n_steps += 1
        return cid

    # convenience wrappers

    def pol(self, tokens, tag=None) -> int:
        return self.emit(Pol(tuple(str(t) for t in tokens)), tag)

    def rup(self, c, tag=None) -> int:
        return self.emit(Rup(c), tag)

    def red(self, c, witness, subproofs=None, tag=None) -> int:
        return self.emit(Red(c, tuple(sorted(witness.items())), subproofs), tag)

    def core(self, cid, tag=None):
        self.emit(MoveToCore(cid), tag)

    def delc(self, cid, witness=None, subproof=None, tag=None):
        """``subproof`` is a list of pol token lists forming an anonymous block."""
        w = tuple(sorted(witness.items())) if witness else ()
        sub = None
        if subproof is not None:
            sub = (Subproof(None, tuple(Pol(tuple(str(t) for t in toks)) for toks in subproof)),)
        self.emit(Delc(cid, w, sub), tag)

    def obju(self, new: Objective, tag=None):
        """Replace the objective, serialized in the configured mode; no-op if unchanged."""
        old = self.db.objective
        if old is not None and old == new:
            return
        if self._obju_mode == "new":
            self.emit(ObjuNew(new), tag or "obju")
        else:
            terms, constant = objective_delta(old, new)
            self.emit(ObjuDiff(terms, constant), tag or "obju")

    def comment(self, text):
        self._write(serialize(Comment(text)), "comment")

    def close(self):
        if not self.closed:
            self._write(FOOTER, "header")
            self.closed = True
