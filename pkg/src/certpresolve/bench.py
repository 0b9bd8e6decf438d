"""Benchmark harness: presolve with and without logging, verify, aggregate.

Rows are flat dicts with fixed field names so every aggregate can be
recomputed from the line-delimited output alone.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import opb
from .checker import Checker
from .presolve import PresolveConfig, run

ROW_FIELDS = (
    "instance", "cell", "presolve_default", "presolve_log", "verify_time", "verify_limit",
    "certificate_bytes", "propagation_bytes", "transactions", "verdict",
)

# named configuration overrides that a matrix can combine
CELLS = {
    "default": {},
    "rup": {"prop_cert": "rup"},
    "pol": {"prop_cert": "pol"},
    "diff": {"obju_mode": "diff"},
    "new": {"obju_mode": "new"},
}


class _Timeout(Exception):
    pass


def shifted_geomean(values, shift=1.0) -> float:
    """``(prod(v + shift))^(1/n) - shift``; 0 for an empty list."""
    vals = list(values)
    if not vals:
        return 0.0
    return math.exp(sum(math.log(v + shift) for v in vals) / len(vals)) - shift


def par2(time_s, solved, limit) -> float:
    """Penalized runtime: unsolved runs count twice the limit."""
    return time_s if solved else 2.0 * limit


def _verify(problem, certificate, limit):
    chk = Checker(problem)
    t0 = time.perf_counter()
    deadline = None if limit is None else t0 + limit

    def watchdog(_c, _i):
        if deadline is not None and time.perf_counter() > deadline:
            raise _Timeout

    try:
        v = chk.check(certificate, on_step=watchdog)
    except _Timeout:
        return "timeout", time.perf_counter() - t0
    except Exception as e:  # parse failures count as rejections here
        return f"error: {e}", time.perf_counter() - t0
    return ("accepted" if v.accepted else "rejected"), time.perf_counter() - t0


def bench_one(name, text, cell, base: PresolveConfig, verify_limit):
    """One row; instance parsing happens before any clock starts."""
    row = dict.fromkeys(ROW_FIELDS)
    row.update(instance=name, cell=cell, verify_limit=verify_limit)
    try:
        problem = opb.parse(text)
        cfg = replace(base, **CELLS[cell])
        t0 = time.perf_counter()
        run(problem, replace(cfg, proof=False))
        row["presolve_default"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        res = run(problem, replace(cfg, proof=True))
        row["presolve_log"] = time.perf_counter() - t0
        row["certificate_bytes"] = res.stats["certificate_bytes"]
        row["propagation_bytes"] = res.stats["bytes_by_tag"].get("propagation", 0)
        row["transactions"] = res.stats["transactions"]
        row["verdict"], row["verify_time"] = _verify(problem, res.certificate, verify_limit)
    except Exception as e:
        row["verdict"] = f"error: {e}"
    return row


def _job(args):
    return bench_one(*args)


def run_bench(instances, cells=("default",), base=None, verify_limit=None, jobs=1):
    """``instances`` is an iterable of ``(name, opb_text)``; rows come back sorted."""
    base = base or PresolveConfig()
    for c in cells:
        if c not in CELLS:
            raise ValueError(f"unknown bench cell {c!r}; choose from {', '.join(CELLS)}")
    tasks = [(name, text, cell, base, verify_limit) for name, text in instances for cell in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_job, tasks))
    else:
        rows = [_job(t) for t in tasks]
    order = {c: i for i, c in enumerate(cells)}
    rows.sort(key=lambda r: (r["instance"], order[r["cell"]]))
    return rows


def load_corpus(directory):
    """``(name, text)`` for every ``*.opb`` file, sorted by name."""
    out = []
    for fn in sorted(os.listdir(directory)):
        if fn.endswith(".opb"):
            with open(os.path.join(directory, fn), encoding="utf-8") as fh:
                out.append((fn[:-4], fh.read()))
    return out


# -- aggregation

def _ok(r):
    return r["verdict"] == "accepted"


def _verify_par2(r):
    limit = r["verify_limit"]
    t = r["verify_time"] or 0.0
    if limit is None:
        return t
    return par2(t, r["verdict"] != "timeout", limit)


def aggregate(rows, cell):
    rs = [r for r in rows if r["cell"] == cell and r["presolve_default"] is not None]
    d = shifted_geomean(r["presolve_default"] for r in rs)
    w = shifted_geomean(r["presolve_log"] for r in rs)
    v = shifted_geomean(_verify_par2(r) for r in rs)
    return {
        "cell": cell,
        "size": sum(1 for r in rows if r["cell"] == cell),
        "verified": sum(1 for r in rs if _ok(r)),
        "default": d,
        "w_log": w,
        "verify": v,
        "overhead": w / d if d > 0 else float("nan"),
        "rel_default": v / d if d > 0 else float("nan"),
        "rel_log": v / w if w > 0 else float("nan"),
    }


def _table(header, body):
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    fmt = "  ".join(("{:<%d}" if i == 0 else "{:>%d}") % w for i, w in enumerate(widths))
    lines = [fmt.format(*header)]
    lines.extend(fmt.format(*r) for r in body)
    return "\n".join(lines)


def format_report(rows, cells, name="corpus") -> str:
    """Per-instance table, then the overhead, verification and cell-comparison summaries."""
    per = [(r["instance"], r["cell"], _f(r["presolve_default"]), _f(r["presolve_log"]), _f(r["verify_time"]),
            r["certificate_bytes"] if r["certificate_bytes"] is not None else "-",
            r["transactions"] if r["transactions"] is not None else "-", r["verdict"]) for r in rows]
    aggs = [aggregate(rows, c) for c in cells]
    for a in aggs:
        per.append(("sgm", a["cell"], _f(a["default"]), _f(a["w_log"]), _f(a["verify"]), "", "", f"{a['verified']}/{a['size']}"))
    out = [_table(("instance", "cell", "default[s]", "w/log[s]", "verify[s]", "bytes", "txns", "verdict"), per), ""]
    out.append("presolve overhead")
    out.append(_table(("test set", "cell", "size", "default[s]", "w/proof log[s]", "relative"),
                      [(name, a["cell"], a["size"], _f(a["default"]), _f(a["w_log"]), _f(a["overhead"], 3))
                       for a in aggs]))
    out.append("")
    out.append("verification (timeouts as PAR2)")
    out.append(_table(("test set", "cell", "size", "verified", "default[s]", "w/proof log[s]", "verify[s]",
                       "rel default", "rel w/log"),
                      [(name, a["cell"], a["size"], a["verified"], _f(a["default"]), _f(a["w_log"]), _f(a["verify"]),
                        _f(a["rel_default"], 2), _f(a["rel_log"], 2)) for a in aggs]))
    if len(aggs) == 2:
        a, b = aggs
        out.append("")
        out.append(f"{a['cell']} vs {b['cell']}")
        rel = b["verify"] / a["verify"] if a["verify"] > 0 else float("nan")
        out.append(_table(("test set", "size", f"{a['cell']} verified", f"{a['cell']} time[s]",
                           f"{b['cell']} verified", f"{b['cell']} time[s]", "relative"),
                          [(name, a["size"], a["verified"], _f(a["verify"]), b["verified"], _f(b["verify"]),
                            _f(rel, 3))]))
    return "\n".join(out)


def _f(x, digits=4):
    if x is None:
        return "-"
    return f"{x:.{digits}f}"


def dump_rows(rows) -> str:
    return "".join(json.dumps({k: r[k] for k in ROW_FIELDS}) + "\n" for r in rows)


def load_rows(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]
