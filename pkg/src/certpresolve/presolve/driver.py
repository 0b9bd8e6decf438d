"""Fixpoint driver: run techniques in rounds and collect the artifacts."""
from __future__ import annotations

import io
import json
import time
from dataclasses import asdict, dataclass, field, fields

from ..model import Problem
from ..proof import ProofWriter
from .state import State
from .techniques import DEFAULT_ORDER, TECHNIQUES


class ConfigError(ValueError):
    pass


@dataclass
class PresolveConfig:
    techniques: tuple = DEFAULT_ORDER
    rounds: int = 20
    prop_cert: str = "rup"
    obju_mode: str = "diff"
    probe_budget: int = 1000
    dominance_budget: int = 50
    max_fill: int = 50
    time_limit: float | None = None
    seed: int = 0
    proof: bool = True

    def __post_init__(self):
        self.techniques = tuple(self.techniques)
        unknown = [t for t in self.techniques if t not in TECHNIQUES]
        if unknown:
            raise ConfigError(f"unknown techniques: {', '.join(unknown)}")
        if self.prop_cert not in ("rup", "pol"):
            raise ConfigError(f"prop_cert must be 'rup' or 'pol', got {self.prop_cert!r}")
        if self.obju_mode not in ("diff", "new"):
            raise ConfigError(f"obju_mode must be 'diff' or 'new', got {self.obju_mode!r}")
        if self.rounds < 0:
            raise ConfigError("rounds must be non-negative")
        for name in ("probe_budget", "dominance_budget", "max_fill"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.time_limit is not None and self.time_limit < 0:
            raise ConfigError("time_limit must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["techniques"] = list(self.techniques)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "PresolveConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**d)


@dataclass
class PresolveResult:
    reduced: Problem
    certificate: str | None
    postsolve: list
    stats: dict
    transactions: list = field(default_factory=list)
    state: State | None = None

    @property
    def infeasible(self) -> bool:
        return self.state is not None and self.state.infeasible


def _call(name, state, cfg):
    fn = TECHNIQUES[name]
    if name == "probing":
        return fn(state, budget=cfg.probe_budget)
    if name == "dominated_variables":
        return fn(state, budget=cfg.dominance_budget)
    if name == "implied_free_substitution":
        return fn(state, max_fill=cfg.max_fill)
    return fn(state)


def run(problem: Problem, config: PresolveConfig | None = None, out=None, on_transaction=None) -> PresolveResult:
    """Presolve ``problem``; the certificate streams to ``out`` or is returned as text.

    ``on_transaction(state, txn)`` is called after every applied transaction.
    """
    cfg = config or PresolveConfig()
    buf = None
    if cfg.proof and out is None:
        out = buf = io.StringIO()
    elif not cfg.proof:
        out = None
    t0 = time.perf_counter()
    writer = ProofWriter(out, problem, obju_mode=cfg.obju_mode, comments=[f"config {cfg.to_json()}"])
    state = State(problem, writer, cfg, on_transaction)
    if cfg.time_limit is not None:
        state.deadline = t0 + cfg.time_limit
    state.tidy()
    rounds = 0
    per_kind: dict = {}
    while rounds < cfg.rounds and not state.infeasible and not state.out_of_time():
        rounds += 1
        applied = 0
        for name in cfg.techniques:
            if state.infeasible or state.out_of_time():
                break
            n = _call(name, state, cfg)
            applied += n
        if applied == 0:
            break
    writer.close()
    for t in state.transactions:
        per_kind[t.kind] = per_kind.get(t.kind, 0) + 1
    reduced = state.reduced_problem()
    stats = {
        "seconds": time.perf_counter() - t0,
        "rounds": rounds,
        "transactions": len(state.transactions),
        "by_kind": per_kind,
        "fixed": len(state.fixed),
        "substituted": len(state.substituted),
        "rows_before": len(problem.constraints) - len(problem.equalities),
        "rows_after": len(state.rows),
        "certificate_bytes": writer.total_bytes if cfg.proof else 0,
        "bytes_by_tag": dict(writer.bytes_by_tag) if cfg.proof else {},
        "infeasible": state.infeasible,
    }
    return PresolveResult(reduced, buf.getvalue() if buf is not None else None,
                          list(state.postsolve), stats, list(state.transactions), state)
