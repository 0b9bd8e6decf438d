"""Presolve techniques.  Each takes the :class:`State` and returns how many
transactions it applied; preconditions are re-checked against the live state
right before a reduction is applied."""
from __future__ import annotations

from fractions import Fraction
from math import gcd

from .. import engine
from ..model import Constraint, from_linear
from .state import _mul


def _signed_column(state, var):
    """{row key: (signed coefficient, is equality)} for ``var``."""
    col = {}
    for key in state.cols.get(var, ()):
        row = state.rows[key]
        coefs, _ = state.lin(row)
        col[key] = (coefs[var], row.is_eq)
    return col


def _obj_coef(state, var):
    f = state.objective
    if f is None:
        return 0
    return f.as_dict().get(var, 0)


def _unit(l):
    return Constraint(((1, l),), 1)


# --------------------------------------------------------------------------
# bound strengthening (clean-up propagation)

def _propagation_unit(state, h, k_lit):
    """Derive ``+1 k_lit >= 1`` from half ``h`` in the configured mode."""
    w = state.writer
    if state.config.prop_cert == "rup":
        return w.rup(_unit(k_lit), tag="propagation")
    c = state.con(h)
    toks = [h]
    ak = None
    for a, l in c.terms:
        if l == k_lit:
            ak = a
            continue
        toks.append(state.n(-l))
        _mul(toks, a)
        toks.append("+")
    toks.extend((ak, "d"))
    return w.pol(toks, tag="propagation")


def bound_strengthening(state) -> int:
    count = 0
    changed = True
    while changed and not state.infeasible and not state.out_of_time():
        changed = False
        for key, row in state.sorted_rows():
            if key not in state.rows:
                continue
            for h in row.halves():
                c = state.con(h)
                if c.is_contradiction():
                    state.derive_infeasible()
                    return count + 1
                if c.is_tautology():
                    continue
                slack = c.slack
                prop = [(a, l) for a, l in c.terms if a > slack]
                if not prop:
                    continue
                if len(c.terms) == 1 and not row.is_eq:
                    state.fix_from_row(key, "bound_strengthening")
                else:
                    a, l = prop[0]
                    with state.transaction("bound_strengthening"):
                        unit = _propagation_unit(state, h, l)
                        state.writer.core(unit)
                        state.fix(abs(l) - 1, 1 if l > 0 else 0, unit)
                count += 1
                changed = True
                break
            if changed or state.infeasible:
                break
    return count


# --------------------------------------------------------------------------
# coefficient tightening and gcd simplification

def coefficient_tightening(state) -> int:
    count = 0
    for key, row in state.sorted_rows():
        if row.is_eq or key not in state.rows:
            continue
        c = state.con(row.geq)
        if c.degree <= 0 or all(a <= c.degree for a, _ in c.terms):
            continue
        with state.transaction("coefficient_tightening"):
            state.rewrite_row(key, lambda h: state.replace_half(h, [h, "s"], lambda new: [new]))
        count += 1
    return count


def _gcd_plan(c: Constraint):
    """(tail literals to drop, g) for the largest sound reduction, or None."""
    terms = sorted(c.terms, key=lambda t: (-t[0], abs(t[1])))
    b = c.degree
    if b <= 0:
        return None
    n = len(terms)
    g = 0
    best = None
    for k in range(1, n + 1):
        g = gcd(g, terms[k - 1][0])
        if g == 1:
            break
        bp = g * -(-b // g)
        tmax = sum(a for a, _ in terms[k:])
        if tmax <= b - bp + g - 1 and (k < n or bp != b):
            best = ([l for _, l in terms[k:]], g)
            break
    return best


def gcd_simplification(state) -> int:
    count = 0
    for key, row in state.sorted_rows():
        if row.is_eq or key not in state.rows:
            continue
        plan = _gcd_plan(state.con(row.geq))
        if plan is None:
            continue
        tail, g = plan

        def reduce(h):
            toks = [h]
            for l in tail:
                toks.extend((state.n(l), "w"))
            toks.extend((g, "d", g, "*"))
            return state.replace_half(h, toks, lambda new: [new])
        with state.transaction("gcd_simplification"):
            state.rewrite_row(key, reduce)
        count += 1
    return count


# --------------------------------------------------------------------------
# parallel rows

def _canon(coefs, rhs):
    g = 0
    for c in coefs.values():
        g = gcd(g, abs(c))
    if g == 0:
        return None, None, None
    return tuple(sorted((v, c // g) for v, c in coefs.items())), Fraction(rhs, g), g


def _scale_tokens(src, num, den):
    toks = [src]
    if num != 1:
        toks.extend((num, "*"))
    if den != 1:
        toks.extend((den, "d"))
    return toks


def parallel_rows(state) -> int:
    """Delete rows that are positive multiples of an earlier row or equality half."""
    count = 0
    seen_ineq = {}  # (canonical coefs, rhs) -> (row key, half, g)
    seen_eq = {}

    def drop(key, pairs):
        # pairs: half -> (source half, lambda)
        def redo(h):
            src, lam = pairs[h]
            state.writer.delc(h, subproof=[_scale_tokens(src, lam.numerator, lam.denominator)])
            return None
        with state.transaction("parallel_rows"):
            state.rewrite_row(key, redo)

    for key, row in state.sorted_rows():
        if key not in state.rows:
            continue
        coefs, rhs = state.lin(row)
        kc, r, g = _canon(coefs, rhs)
        if kc is None:
            continue
        neg = tuple((v, -c) for v, c in kc)
        if row.is_eq:
            hit = seen_eq.get((kc, r))
            if hit is not None:
                other = seen_eq[(neg, -r)]
                lam = Fraction(g, hit[2])
                drop(key, {row.geq: (hit[1], lam), row.leq: (other[1], lam)})
                count += 1
                continue
            for ck, rr, half in ((kc, r, row.geq), (neg, -r, row.leq)):
                ih = seen_ineq.pop((ck, rr), None)
                if ih is not None:
                    drop(ih[0], {ih[1]: (half, Fraction(ih[2], g))})
                    count += 1
                seen_eq[(ck, rr)] = (key, half, g)
            continue
        hit = seen_eq.get((kc, r)) or seen_ineq.get((kc, r))
        if hit is not None:
            drop(key, {row.geq: (hit[1], Fraction(g, hit[2]))})
            count += 1
            continue
        seen_ineq[(kc, r)] = (key, row.geq, g)
    return count


# --------------------------------------------------------------------------
# sparsify

def sparsify(state, max_eq_size=30) -> int:
    count = 0
    for ekey, erow in state.sorted_rows():
        if not erow.is_eq or ekey not in state.rows:
            continue
        ecoefs, _ = state.lin(erow)
        if len(ecoefs) > max_eq_size:
            continue
        targets = set()
        for v in ecoefs:
            targets.update(state.cols.get(v, ()))
        targets.discard(ekey)
        for dkey in sorted(targets):
            if dkey not in state.rows or ekey not in state.rows:
                continue
            drow = state.rows[dkey]
            dcoefs, drhs = state.lin(drow)
            best = None
            for v in sorted(set(dcoefs) & set(ecoefs)):
                if dcoefs[v] % ecoefs[v]:
                    continue
                s = -dcoefs[v] // ecoefs[v]
                merged = dict(dcoefs)
                for u, c in ecoefs.items():
                    merged[u] = merged.get(u, 0) + s * c
                nnz = sum(1 for c in merged.values() if c)
                if nnz < len(dcoefs) and (best is None or nnz < best[0]):
                    best = (nnz, s)
            if best is None:
                continue
            s = best[1]
            plus, minus = (erow.geq, erow.leq) if s > 0 else (erow.leq, erow.geq)
            k = abs(s)

            def agg(h, plus=plus, minus=minus, k=k, drow=drow):
                src, back = (plus, minus) if h == drow.geq else (minus, plus)
                return state.replace_half(h, _mul([h, src], k) + ["+"],
                                          lambda new: _mul([new, back], k) + ["+"])
            with state.transaction("sparsify"):
                state.rewrite_row(dkey, agg)
            count += 1
    return count


# --------------------------------------------------------------------------
# substitution of implied free variables and simple probing

def _fill(state, key, var, erow):
    e = state.lin(erow)[0][var]
    p_half, n_half = (erow.geq, erow.leq) if e > 0 else (erow.leq, erow.geq)
    total = 0
    for k in state.cols.get(var, ()):
        if k == key:
            continue
        row = state.rows[k]
        c = state.con(row.geq)
        a, l = c.coef_of(var)
        partner = state.con(n_half if l > 0 else p_half)
        total += len(engine.add(c, engine.multiply(partner, a)).terms) - len(c.terms)
    return total


def substitute_implied_free(state, max_eq_size=30, max_fill=50, singletons_only=False) -> int:
    count = 0
    while not state.infeasible and not state.out_of_time():
        best = None
        for key, row in state.sorted_rows():
            if not row.is_eq:
                continue
            coefs, _ = state.lin(row)
            if len(coefs) > max_eq_size or len(coefs) < 2:
                continue
            for var in sorted(coefs):
                if abs(coefs[var]) != 1:
                    continue
                if singletons_only and len(state.cols.get(var, ())) != 1:
                    continue
                up, lo = state.simulate_evidence(key, var)
                if up is False or lo is False:
                    continue
                fill = _fill(state, key, var, row)
                if fill > max_fill:
                    continue
                cand = (fill, key, var, up, lo)
                if best is None or cand[:3] < best[:3]:
                    best = cand
        if best is None:
            break
        _, key, var, up, lo = best
        kind = "singleton_substitution" if singletons_only else "implied_free_substitution"
        with state.transaction(kind):
            state.substitute(key, var, up, lo)
        count += 1
    return count


def _simple_probing_links(coefs, rhs):
    """(k, [(p, same)]) for a qualifying equality; ``same`` means x_p = x_k."""
    if len(coefs) < 2 or sum(coefs.values()) != 2 * rhs:
        return None
    pos = sum(c for c in coefs.values() if c > 0)
    for k in sorted(coefs):
        if abs(coefs[k]) == pos - rhs:
            sign = 1 if coefs[k] > 0 else -1
            links = [(p, coefs[p] * sign < 0) for p in sorted(coefs) if p != k]
            return k, links
    return None


def _link_halves(p, k, same):
    P, K = p + 1, k + 1
    if same:  # x_p - x_k = 0
        return from_linear({p: 1, k: -1}, 0), from_linear({p: -1, k: 1}, 0)
    return from_linear({p: 1, k: 1}, 1), from_linear({p: -1, k: -1}, -1)


def simple_probing(state) -> int:
    count = 0
    w = state.writer
    for key, row in state.sorted_rows():
        if state.infeasible or key not in state.rows or not row.is_eq:
            continue
        coefs, rhs = state.lin(row)
        plan = _simple_probing_links(coefs, rhs)
        if plan is None:
            continue
        k, links = plan
        halves = [(h, state.con(h)) for h in row.halves()]
        derived = []
        ok = True
        for p, same in links:
            g, l = _link_halves(p, k, same)
            if not (engine.rup_check(halves, g) and engine.rup_check(halves, l)):
                ok = False
                break
            derived.append((p, g, l))
        if not ok:
            continue
        with state.transaction("simple_probing"):
            link_rows = []
            for p, g, l in derived:
                gid = w.rup(g)
                w.core(gid)
                lid = w.rup(l)
                w.core(lid)
                link_rows.append((p, state.add_row(gid, lid)))
            for p, lrow in link_rows:
                if lrow.geq in state.rows:
                    state.substitute(lrow.geq, p, None, None)
        count += 1
    return count


# --------------------------------------------------------------------------
# singletons and duality-based fixing

def _dual_direction(state, var):
    col = _signed_column(state, var)
    c = _obj_coef(state, var)
    if any(eq for _, eq in col.values()):
        return None
    coefs = [a for a, _ in col.values()]
    if all(a >= 0 for a in coefs) and c <= 0:
        return 1
    if all(a <= 0 for a in coefs) and c >= 0:
        return 0
    return None


def _dual_fix(state, var, value, kind):
    w = state.writer
    l = var + 1 if value else -(var + 1)
    with state.transaction(kind):
        unit = w.red(_unit(l), {var: bool(value)})
        w.core(unit)
        state.fix(var, value, unit)


def duality_based_fixing(state) -> int:
    count = 0
    for var in state.active_vars():
        if state.infeasible or state.out_of_time():
            break
        if var in state.fixed or var in state.substituted:
            continue
        if var not in state.cols and _obj_coef(state, var) == 0:
            continue
        value = _dual_direction(state, var)
        if value is None:
            continue
        _dual_fix(state, var, value, "dual_fixing")
        count += 1
    return count


def singleton_variables(state) -> int:
    count = 0
    for var in sorted(state.cols):
        if state.infeasible or state.out_of_time():
            break
        keys = state.cols.get(var)
        if not keys or len(keys) != 1:
            continue
        key = next(iter(keys))
        value = _dual_direction(state, var)
        if value is not None:
            _dual_fix(state, var, value, "singleton_dual")
            count += 1
            continue
        row = state.rows[key]
        if not row.is_eq:
            continue
        coefs, _ = state.lin(row)
        if abs(coefs[var]) != 1 or len(coefs) < 2:
            continue
        up, lo = state.simulate_evidence(key, var)
        implied = up is not False and lo is not False
        with state.transaction("singleton_substitution" if implied else "singleton_slack"):
            state.substitute(key, var, up or None, lo or None, keep_aux=not implied)
        count += 1
    return count


# --------------------------------------------------------------------------
# dominance

def _columns(state, vars_):
    return {v: _signed_column(state, v) for v in vars_}


def _dominates(cj, ck, colj, colk, sj=1, sk=1):
    """Literal column ``sj*x_j`` dominates ``sk*x_k`` (signs flip coefficients)."""
    if sj * cj > sk * ck:
        return False
    for key in set(colj) | set(colk):
        aj, eqj = colj.get(key, (0, False))
        ak, eqk = colk.get(key, (0, False))
        aj *= sj
        ak *= sk
        if eqj or eqk:
            if aj != ak:
                return False
        elif aj < ak:
            return False
    return True


def dominated_variables(state, budget=50, pair_budget=20000) -> int:
    count = 0
    w = state.writer
    vars_ = [v for v in sorted(state.cols) if v not in state.fixed]
    cols = _columns(state, vars_)
    obj = {v: _obj_coef(state, v) for v in vars_}
    scanned = 0
    for j in vars_:
        for k in vars_:
            if count >= budget or scanned >= pair_budget or state.infeasible:
                return count
            if j == k or (j, k) in state.dominated or (k, j) in state.dominated:
                continue
            scanned += 1
            if not _dominates(obj[j], obj[k], cols[j], cols[k]):
                continue
            if j > k and _dominates(obj[k], obj[j], cols[k], cols[j]):
                continue  # symmetric pair: the lower index dominates
            c = from_linear({j: 1, k: -1}, 0)
            with state.transaction("dominance"):
                cid = w.red(c, {j: k + 1, k: j + 1})
                w.core(cid)
                state.add_row(cid)
            state.dominated.add((j, k))
            count += 1
            cols = _columns(state, vars_)
    return count


def dominated_variables_advanced(state, pair_budget=20000) -> int:
    """Fixings from dominance between literals when a bound is implied.

    For literals ``p`` (on x_j) dominating ``q`` (on x_k): when some row
    forbids ``p`` and ``q`` both true, ``q`` is fixed false; when some row
    forbids both false, ``p`` is fixed true.  Both use the witness
    ``{p -> 1, q -> 0}``.
    """
    count = 0
    w = state.writer
    scanned = 0
    while not state.infeasible and not state.out_of_time():
        vars_ = sorted(state.cols)
        cols = _columns(state, vars_)
        obj = {v: _obj_coef(state, v) for v in vars_}
        found = None
        for j in vars_:
            for k in vars_:
                if j == k or found:
                    continue
                shared = sorted(set(cols[j]) & set(cols[k]))
                if not shared:
                    continue
                for sj in (1, -1):
                    for sk in (1, -1):
                        if found or scanned >= pair_budget:
                            continue
                        scanned += 1
                        if not _dominates(obj[j], obj[k], cols[j], cols[k], sj, sk):
                            continue
                        p = (j + 1) * sj
                        q = (k + 1) * sk
                        view = [(h, state.con(h)) for key in shared for h in state.rows[key].halves()]
                        clause_nt = Constraint(tuple(sorted(((1, -p), (1, -q)), key=lambda t: abs(t[1]))), 1)
                        clause_pq = Constraint(tuple(sorted(((1, p), (1, q)), key=lambda t: abs(t[1]))), 1)
                        if engine.rup_check(view, clause_nt):
                            found = (clause_nt, -q, j, k, p, q)
                        elif engine.rup_check(view, clause_pq):
                            found = (clause_pq, p, j, k, p, q)
        if not found:
            break
        clause, fix_lit, j, k, p, q = found
        with state.transaction("advanced_dominance"):
            aux = w.rup(clause)
            unit = w.red(_unit(fix_lit), {j: p > 0, k: q < 0})
            w.delc(aux)
            w.core(unit)
            v = abs(fix_lit) - 1
            state.fix(v, 1 if fix_lit > 0 else 0, unit)
        count += 1
    return count


# --------------------------------------------------------------------------
# probing

def _probe(state, var, value):
    view = [(h, state.con(h)) for _, row in state.sorted_rows() for h in row.halves()]
    return engine.propagate(view, {var: value})


def probing(state, budget=1000) -> int:
    count = 0
    w = state.writer
    order = sorted(state.cols, key=lambda v: (-len(state.cols[v]), v))[:budget]
    for var in order:
        while not state.infeasible and var in state.cols and not state.out_of_time():
            f0 = _probe(state, var, 0)
            f1 = _probe(state, var, 1)
            pos = var + 1
            if f0.conflict is not None and f1.conflict is not None:
                with state.transaction("probing"):
                    w.rup(_unit(pos))
                    state.derive_infeasible()
                count += 1
                break
            if f0.conflict is not None or f1.conflict is not None:
                l = pos if f0.conflict is not None else -pos
                with state.transaction("probing"):
                    unit = w.rup(_unit(l))
                    w.core(unit)
                    state.fix(var, 1 if l > 0 else 0, unit)
                count += 1
                break
            a0, a1 = f0.assignment, f1.assignment
            same = [v for v in sorted(a0) if v != var and v in a1 and a0[v] == a1[v]]
            if same:
                v = same[0]
                l = v + 1 if a0[v] else -(v + 1)
                with state.transaction("probing"):
                    first = w.rup(Constraint(tuple(sorted(((1, l), (1, pos)), key=lambda t: abs(t[1]))), 1))
                    second = w.rup(Constraint(tuple(sorted(((1, l), (1, -pos)), key=lambda t: abs(t[1]))), 1))
                    unit = w.pol([first, second, "+", 2, "d"])
                    w.delc(first)
                    w.delc(second)
                    w.core(unit)
                    state.fix(v, a0[v], unit)
                count += 1
                continue
            for v in sorted(a0):
                if v == var or v not in a1 or v not in state.cols:
                    continue
                pair = (min(v, var), max(v, var))
                if pair in state.linked:
                    continue
                same_dir = a1[v] == 1  # x_v follows x_var
                g, l = _link_halves(v, var, same_dir)
                with state.transaction("probing"):
                    gid = w.rup(g)
                    w.core(gid)
                    lid = w.rup(l)
                    w.core(lid)
                    state.add_row(gid, lid)
                state.linked.add(pair)
                count += 1
            break
    return count


TECHNIQUES = {
    "bound_strengthening": bound_strengthening,
    "coefficient_tightening": coefficient_tightening,
    "gcd_simplification": gcd_simplification,
    "parallel_rows": parallel_rows,
    "simple_probing": simple_probing,
    "sparsify": sparsify,
    "implied_free_substitution": substitute_implied_free,
    "singleton_variables": singleton_variables,
    "duality_based_fixing": duality_based_fixing,
    "dominated_variables": dominated_variables,
    "dominated_variables_advanced": dominated_variables_advanced,
    "probing": probing,
}

DEFAULT_ORDER = tuple(TECHNIQUES)
