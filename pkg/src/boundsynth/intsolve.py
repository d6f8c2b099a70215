"""Built-in validity engine for quantifier-free integer/boolean formulas
with uninterpreted functions.

Used as the default backend of the logic module when no external solver
command is configured.  The procedure is conservative in both directions:

  * "valid" is only reported when the negated query is refuted by exact
    reasoning (ring normalization through equality substitution, Euclidean
    elimination of div/mod/ceil by constant divisors, Ackermann expansion
    of function congruence, and integer Fourier-Motzkin with real/dark
    shadows a la the Omega test);
  * "invalid" is only reported when a concrete countermodel has been
    re-checked against the original formula by direct evaluation;
  * everything else is "unknown", which callers treat as rejection.

Nonlinear monomials that survive equality substitution are relaxed to
fresh variables; the relaxation can only cause spurious countermodels,
which the evaluation check filters out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import gcd
from typing import Optional

from .lang import (BOOL, BaseType, INT, LBin, LBool, LFun, LInt, LIte, LNot,
                   LVar, LogicalExpr, eval_logic, free_logic_vars,
                   subst_logic_many)

Poly = dict[tuple[str, ...], int]  # monomial (sorted atom names) -> coeff

_MAX_INEQS = 6000
_MAX_BRANCHES = 200000


class Unsupported(Exception):
    pass


class _Timeout(Exception):
    pass


@dataclass
class Result:
    status: str  # "valid" | "invalid" | "unknown"
    model: Optional[dict[str, object]] = None
    reason: str = ""


# ---------------------------------------------------------------------------
# Polynomial helpers
# ---------------------------------------------------------------------------

def _pconst(c: int) -> Poly:
    return {(): c} if c else {}


def _pvar(name: str) -> Poly:
    return {(name,): 1}


def _padd(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        n = out.get(m, 0) + c
        if n:
            out[m] = n
        elif m in out:
            del out[m]
    return out


def _pscale(a: Poly, k: int) -> Poly:
    if k == 0:
        return {}
    return {m: c * k for m, c in a.items()}


def _psub(a: Poly, b: Poly) -> Poly:
    return _padd(a, _pscale(b, -1))


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(sorted(ma + mb))
            n = out.get(m, 0) + ca * cb
            if n:
                out[m] = n
            elif m in out:
                del out[m]
    return out


def _ppow(a: Poly, k: int) -> Poly:
    out = _pconst(1)
    for _ in range(k):
        out = _pmul(out, a)
    return out


def _pkey(p: Poly):
    return tuple(sorted(p.items()))


def _const_of(p: Poly) -> Optional[int]:
    if not p:
        return 0
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _subst_atom(p: Poly, name: str, repl: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        k = sum(1 for a in m if a == name)
        rest = tuple(a for a in m if a != name)
        piece = _pscale(_pmul(_ppow(repl, k), {rest: 1}), c) if k else {m: c}
        out = _padd(out, piece)
    return out


def _atoms_of(p: Poly) -> set[str]:
    return {a for m in p for a in m}


# ---------------------------------------------------------------------------
# Flattening: logical expressions -> formulas over polynomial literals
# ---------------------------------------------------------------------------

# Formula encoding:
#   ("and", [f...]) / ("or", [f...])
#   ("le", poly)   meaning poly <= 0
#   ("eq", poly)   meaning poly == 0
#   ("ne", poly)   meaning poly != 0
#   ("bvar", name, polarity)

_TRUE = ("and", [])
_FALSE = ("or", [])


class _Flattener:
    def __init__(self, var_sorts: dict[str, BaseType],
                 fun_sorts: dict[str, BaseType]):
        self.var_sorts = var_sorts
        self.fun_sorts = fun_sorts
        self.atom_by_key: dict = {}
        self.fun_atoms: list[tuple[str, str, tuple[Poly, ...], bool]] = []
        # (atom name, fun name, arg polys, is_bool)
        self.side: list = []  # definitional formulas
        self.counter = 0
        self.div_defs: dict = {}
        self.cond_vars: dict[LogicalExpr, str] = {}
        self.lit_vars: dict = {}
        self.bool_defs: dict[str, tuple] = {}  # atom -> (if-true, if-false)

    def lit_var(self, tag: str, poly: Poly) -> str:
        """Boolean atom standing for an arithmetic literal.  Comparisons are
        interned so every occurrence of the same (in)equality shares one
        decision variable.  The definitions are triggered: the literal (or
        its negation) enters the arithmetic context only once the atom is
        assigned, so atoms irrelevant to a branch never cause case splits."""
        key = (tag, _pkey(poly))
        if key in self.lit_vars:
            return self.lit_vars[key]
        b = self.fresh("p")
        self.lit_vars[key] = b
        if tag == "le":
            self.bool_defs[b] = (("le", poly),
                                 ("le", _padd(_pscale(poly, -1), _pconst(1))))
        else:  # eq
            self.bool_defs[b] = (("eq", poly), ("ne", poly))
        return b

    def cond_var(self, c: LogicalExpr) -> str:
        """Boolean definition variable for an ite condition; sharing it
        across occurrences lets the search split on each distinct condition
        once instead of once per occurrence."""
        if c not in self.cond_vars:
            g = self.fresh("g")
            self.cond_vars[c] = g
            self.bool_defs[g] = (self.tr_bool(c, True), self.tr_bool(c, False))
        return self.cond_vars[c]

    def fresh(self, tag: str) -> str:
        self.counter += 1
        return f"{tag}@{self.counter}"

    def sort_of(self, e: LogicalExpr) -> BaseType:
        match e:
            case LInt(_):
                return INT
            case LBool(_):
                return BOOL
            case LVar(name):
                return self.var_sorts.get(name, INT)
            case LFun(name, _):
                return self.fun_sorts.get(name, INT)
            case LNot(_):
                return BOOL
            case LIte(_, t, _):
                return self.sort_of(t)
            case LBin(op, _, _):
                return INT if op in ("+", "-", "*", "div", "cdiv", "mod") else BOOL
        raise Unsupported(f"cannot infer sort of {e!r}")

    # -- integers ---------------------------------------------------------

    def tr_int(self, e: LogicalExpr) -> Poly:
        match e:
            case LInt(v):
                return _pconst(v)
            case LVar(name):
                if self.var_sorts.get(name, INT) == BOOL:
                    raise Unsupported(f"boolean variable {name} in arithmetic")
                return _pvar(name)
            case LBin("+", a, b):
                return _padd(self.tr_int(a), self.tr_int(b))
            case LBin("-", a, b):
                return _psub(self.tr_int(a), self.tr_int(b))
            case LBin("*", a, b):
                return _pmul(self.tr_int(a), self.tr_int(b))
            case LBin(("div" | "cdiv" | "mod") as op, a, b):
                return self.tr_divmod(op, a, b)
            case LFun(name, args):
                return _pvar(self.fun_atom(name, args, is_bool=False))
            case LIte(c, t, f):
                w = self.fresh("ite")
                wp = _pvar(w)
                g = self.cond_var(c)
                tp = self.tr_int(t)
                fp = self.tr_int(f)
                self.side.append(("or", [("bvar", g, False),
                                         ("eq", _psub(wp, tp))]))
                self.side.append(("or", [("bvar", g, True),
                                         ("eq", _psub(wp, fp))]))
                return wp
        raise Unsupported(f"non-integer expression {e!r}")

    def tr_divmod(self, op: str, a: LogicalExpr, b: LogicalExpr) -> Poly:
        num = self.tr_int(a)
        den = _const_of(self.tr_int(b))
        if den is None or den <= 0:
            raise Unsupported("division requires a positive constant divisor")
        key = (op if op != "mod" else "div", _pkey(num), den)
        if key not in self.div_defs:
            q = self.fresh("q")
            r = self.fresh("r")
            qp, rp = _pvar(q), _pvar(r)
            if key[0] == "div":
                # num = den*q + r, 0 <= r < den
                self.side.append(("eq", _psub(num, _padd(_pscale(qp, den), rp))))
            else:
                # cdiv: num = den*q - r, 0 <= r < den
                self.side.append(("eq", _psub(num, _psub(_pscale(qp, den), rp))))
            self.side.append(("le", _pscale(rp, -1)))
            self.side.append(("le", _padd(rp, _pconst(1 - den))))
            self.div_defs[key] = (qp, rp)
        qp, rp = self.div_defs[key]
        if op == "mod":
            return rp
        return qp

    def fun_atom(self, name: str, args: tuple[LogicalExpr, ...],
                 is_bool: bool) -> str:
        arg_polys = tuple(self.tr_int(a) for a in args)
        key = ("fun", name, tuple(_pkey(p) for p in arg_polys), is_bool)
        if key not in self.atom_by_key:
            atom = self.fresh(f"f.{name}")
            self.atom_by_key[key] = atom
            self.fun_atoms.append((atom, name, arg_polys, is_bool))
        return self.atom_by_key[key]

    # -- booleans ---------------------------------------------------------

    def tr_bool(self, e: LogicalExpr, pos: bool):
        match e:
            case LBool(v):
                return _TRUE if v == pos else _FALSE
            case LVar(name):
                if self.var_sorts.get(name, INT) != BOOL:
                    raise Unsupported(f"integer variable {name} used as boolean")
                return ("bvar", name, pos)
            case LFun(name, args):
                if self.fun_sorts.get(name, INT) != BOOL:
                    raise Unsupported(f"{name} is not boolean-valued")
                return ("bvar", self.fun_atom(name, args, is_bool=True), pos)
            case LNot(a):
                return self.tr_bool(a, not pos)
            case LBin("and", a, b):
                tag = "and" if pos else "or"
                return (tag, [self.tr_bool(a, pos), self.tr_bool(b, pos)])
            case LBin("or", a, b):
                tag = "or" if pos else "and"
                return (tag, [self.tr_bool(a, pos), self.tr_bool(b, pos)])
            case LBin("==>", a, b):
                if pos:
                    return ("or", [self.tr_bool(a, False), self.tr_bool(b, True)])
                return ("and", [self.tr_bool(a, True), self.tr_bool(b, False)])
            case LIte(c, t, f):
                g = self.cond_var(c)
                return ("or", [
                    ("and", [("bvar", g, True), self.tr_bool(t, pos)]),
                    ("and", [("bvar", g, False), self.tr_bool(f, pos)]),
                ])
            case LBin(("==" | "!=") as op, a, b) \
                    if self.sort_of(a) == BOOL or self.sort_of(b) == BOOL:
                want = (op == "==") == pos  # True: iff, False: xor
                if want:
                    return ("or", [
                        ("and", [self.tr_bool(a, True), self.tr_bool(b, True)]),
                        ("and", [self.tr_bool(a, False), self.tr_bool(b, False)]),
                    ])
                return ("or", [
                    ("and", [self.tr_bool(a, True), self.tr_bool(b, False)]),
                    ("and", [self.tr_bool(a, False), self.tr_bool(b, True)]),
                ])
            case LBin(op, a, b) if op in ("==", "!=", "<=", "<", ">=", ">"):
                diff = _psub(self.tr_int(a), self.tr_int(b))
                if not pos:
                    op = {"==": "!=", "!=": "==", "<=": ">", ">": "<=",
                          "<": ">=", ">=": "<"}[op]
                if op in ("==", "!="):
                    c = _const_of(diff)
                    if c is not None:
                        return _TRUE if (c == 0) == (op == "==") else _FALSE
                    atom = self.lit_var("eq", _sign_normal(diff))
                    return ("bvar", atom, op == "==")
                match op:
                    case "<=": poly = diff
                    case "<": poly = _padd(diff, _pconst(1))
                    case ">=": poly = _pscale(diff, -1)
                    case _: poly = _padd(_pscale(diff, -1), _pconst(1))
                c = _const_of(poly)
                if c is not None:
                    return _TRUE if c <= 0 else _FALSE
                return ("bvar", self.lit_var("le", poly), True)
        raise Unsupported(f"non-boolean expression {e!r}")

    def congruence_clause(self, i: int, j: int):
        """Ackermann clause for one pair of same-function atoms."""
        a1, _n1, args1, b1 = self.fun_atoms[i]
        a2, _n2, args2, _b2 = self.fun_atoms[j]
        disj = [("ne", _psub(p1, p2)) for p1, p2 in zip(args1, args2)]
        if b1:
            same = ("or", [("and", [("bvar", a1, True), ("bvar", a2, True)]),
                           ("and", [("bvar", a1, False), ("bvar", a2, False)])])
        else:
            same = ("eq", _psub(_pvar(a1), _pvar(a2)))
        return ("or", disj + [same])

    def congruence_pairs(self) -> list[tuple[int, int]]:
        out = []
        for i in range(len(self.fun_atoms)):
            _a1, n1, args1, b1 = self.fun_atoms[i]
            for j in range(i + 1, len(self.fun_atoms)):
                _a2, n2, args2, b2 = self.fun_atoms[j]
                if n1 == n2 and len(args1) == len(args2) and b1 == b2:
                    out.append((i, j))
        return out


# ---------------------------------------------------------------------------
# DPLL over the flattened formula
# ---------------------------------------------------------------------------

class _Search:
    def __init__(self, deadline: float, bool_defs: Optional[dict] = None):
        self.deadline = deadline
        self.bool_defs = bool_defs or {}
        self.branches = 0

    def check_budget(self):
        if time.monotonic() > self.deadline:
            raise _Timeout()
        self.branches += 1
        if self.branches > _MAX_BRANCHES:
            raise _Timeout()

    def solve(self, pending: list, bools: dict[str, bool],
              eqs: list[Poly], ineqs: list[Poly],
              bounds: Optional[dict] = None) -> Result:
        """Satisfiability of the conjunction of `pending` formulas plus the
        accumulated literals.  Returns invalid=sat (with model), valid=unsat.

        Disjunctions are deferred until no deterministic work remains, so
        every branch starts from the full literal context.  Single-atom
        literals feed an interval store that kills inconsistent branches
        before any elimination runs."""
        self.check_budget()
        pending = list(pending)
        bools = dict(bools)
        eqs = list(eqs)
        ineqs = list(ineqs)
        bounds = dict(bounds) if bounds else {}
        while pending:
            idx = next((i for i, f in enumerate(pending)
                        if f[0] not in ("or", "ne")), None)
            if idx is not None:
                f = pending.pop(idx)
                tag = f[0]
                if tag == "and":
                    pending.extend(f[1])
                elif tag == "le":
                    c = _const_of(f[1])
                    if c is not None:
                        if c > 0:
                            return Result("valid")
                    else:
                        if not _bounds_add(bounds, "le", f[1]):
                            return Result("valid")
                        ineqs.append(f[1])
                elif tag == "eq":
                    c = _const_of(f[1])
                    if c is not None:
                        if c != 0:
                            return Result("valid")
                    else:
                        if not _bounds_add(bounds, "eq", f[1]):
                            return Result("valid")
                        eqs.append(f[1])
                elif tag == "bvar":
                    _, name, pol = f
                    if name in bools:
                        if bools[name] != pol:
                            return Result("valid")
                    else:
                        bools[name] = pol
                        defs = self.bool_defs.get(name)
                        if defs is not None:
                            pending.append(defs[0] if pol else defs[1])
                else:
                    raise Unsupported(f"bad formula tag {tag}")
                continue

            # Only disjunctions remain: propagate decided literals, then
            # branch on the smallest clause.
            progressed = False
            simplified: list = []
            for f in pending:
                if f[0] == "ne":
                    p = f[1]
                    f = ("or", [("le", _padd(p, _pconst(1))),
                                ("le", _padd(_pscale(p, -1), _pconst(1)))])
                parts = []
                satisfied = False
                for part in f[1]:
                    keep, sat = _judge_part(part, bools)
                    if sat:
                        satisfied = True
                        break
                    if keep:
                        parts.append(part)
                if satisfied:
                    progressed = True
                    continue
                if not parts:
                    return Result("valid")
                if len(parts) == 1:
                    simplified.append(parts[0])
                    progressed = True
                else:
                    simplified.append(("or", parts))
            pending = simplified
            if progressed:
                continue

            f = min(pending, key=lambda g: len(g[1]))
            pending.remove(f)
            any_unknown = None
            for part in f[1]:
                sub = self.solve(pending + [part], bools, eqs, ineqs, bounds)
                if sub.status == "invalid":
                    return sub
                if sub.status == "unknown":
                    any_unknown = sub
            return any_unknown or Result("valid")
        return self.decide_arith(bools, eqs, ineqs)

    # -- conjunction of arithmetic literals --------------------------------

    def decide_arith(self, bools: dict[str, bool], eqs: list[Poly],
                     ineqs: list[Poly]) -> Result:
        self.check_budget()
        eqs = list(eqs)
        ineqs = list(ineqs)
        substitutions: list[tuple[str, Poly]] = []

        # Equality elimination by unit-coefficient substitution; this is the
        # step that linearizes products such as 2*(k*y) = (2k)*y.  After the
        # substitution loop, atoms pinned to a single value by opposing
        # inequalities (e.g. division remainders) are turned into equalities
        # and the loop re-runs, which linearizes products with them too.
        while True:
            contradiction, eqs, ineqs = self._eliminate_equalities(
                eqs, ineqs, substitutions)
            if contradiction:
                return Result("valid")
            derived = _pinned_atoms(ineqs)
            if not derived:
                break
            eqs = eqs + derived

        # Remaining equalities become inequality pairs.
        for p in eqs:
            ineqs.append(p)
            ineqs.append(_pscale(p, -1))

        # Relax surviving nonlinear monomials to opaque variables.  This can
        # only add models; spurious ones are caught by verification.
        relaxed: dict[tuple[str, ...], str] = {}
        flat: list[Poly] = []
        for p in ineqs:
            q: Poly = {}
            for m, c in p.items():
                if len(m) > 1:
                    if m not in relaxed:
                        relaxed[m] = f"nl@{len(relaxed)}"
                    m = (relaxed[m],)
                q[m] = q.get(m, 0) + c
            flat.append({m: c for m, c in q.items() if c})

        status, model = self.fm_integer(flat)
        if status == "unsat":
            return Result("valid")
        if status == "unknown":
            return Result("unknown", reason="integer elimination inexact")
        assert model is not None
        for atom, repl in reversed(substitutions):
            model[atom] = _eval_poly(repl, model)
        for mono, alias in relaxed.items():
            # recompute relaxed monomials from their factors for reporting
            val = 1
            for a in mono:
                val *= model.get(a, 0)
            model[f"{alias}:exact"] = val
        return Result("invalid", model={**model, **{f"b:{k}": v for k, v in bools.items()}})

    def _eliminate_equalities(self, eqs: list[Poly], ineqs: list[Poly],
                              substitutions: list[tuple[str, Poly]]
                              ) -> tuple[bool, list[Poly], list[Poly]]:
        """Substitute away unit-coefficient equalities.  Returns
        (contradiction, remaining eqs, rewritten ineqs)."""
        while True:
            work: list[Poly] = []
            for p in eqs:
                c = _const_of(p)
                if c is not None:
                    if c != 0:
                        return True, [], []
                    continue
                g = 0
                for m, coeff in p.items():
                    if m != ():
                        g = gcd(g, abs(coeff))
                if g > 1:
                    const = p.get((), 0)
                    if const % g != 0:
                        return True, [], []
                    p = {m: c_ // g for m, c_ in p.items()}
                work.append(p)
            found = None
            for i, p in enumerate(work):
                for m, coeff in p.items():
                    if len(m) == 1 and abs(coeff) == 1:
                        atom = m[0]
                        # only solvable if the atom occurs in no other monomial
                        if all(atom not in mm or mm == m for mm in p):
                            found = (i, atom, coeff)
                            break
                if found:
                    break
            if not found:
                return False, work, ineqs
            i, atom, coeff = found
            p = work.pop(i)
            rest = {m: c_ for m, c_ in p.items() if m != (atom,)}
            repl = _pscale(rest, -coeff)  # coeff is +-1
            substitutions.append((atom, repl))
            eqs = [_subst_atom(q, atom, repl) for q in work]
            ineqs = [_subst_atom(q, atom, repl) for q in ineqs]

    # -- integer Fourier-Motzkin with real/dark shadows --------------------

    def fm_integer(self, ineqs: list[Poly]) -> tuple[str, Optional[dict[str, int]]]:
        outcome, model = self._fm(ineqs, dark=False)
        if outcome == "unsat":
            return "unsat", None
        if outcome == "sat-exact":
            return "sat", model
        outcome2, model2 = self._fm(ineqs, dark=True)
        if outcome2 in ("sat-exact", "sat-approx"):
            return "sat", model2
        return "unknown", None

    def _fm(self, ineqs: list[Poly], dark: bool) -> tuple[str, Optional[dict]]:
        ineqs = [p for p in {_pkey(q): q for q in ineqs}.values()]
        exact = True
        stack: list[tuple[str, list, list]] = []
        while True:
            self.check_budget()
            consts = [p for p in ineqs if _const_of(p) is not None]
            for p in consts:
                if _const_of(p) > 0:
                    return "unsat", None
            ineqs = [_tighten(p) for p in ineqs if _const_of(p) is None]
            if not ineqs:
                break
            atoms = sorted(_atoms_of_all(ineqs))
            var = _pick_var(ineqs, atoms)
            lowers, uppers, rest = [], [], []
            for p in ineqs:
                c = p.get((var,), 0)
                if c > 0:
                    uppers.append((c, _psub({}, {m: k for m, k in p.items()
                                                 if m != (var,)})))
                elif c < 0:
                    lowers.append((-c, {m: k for m, k in p.items()
                                        if m != (var,)}))
                else:
                    rest.append(p)
            stack.append((var, lowers, uppers))
            if len(lowers) * len(uppers) + len(rest) > _MAX_INEQS:
                return "unknown", None
            new = list(rest)
            for b, beta in lowers:      # b*var >= beta
                for a, alpha in uppers:  # a*var <= alpha
                    shadow = _psub(_pscale(beta, a), _pscale(alpha, b))
                    if dark:
                        shadow = _padd(shadow, _pconst((a - 1) * (b - 1)))
                    elif a > 1 and b > 1:
                        exact = False
                    new.append(shadow)
            ineqs = [p for p in {_pkey(q): q for q in new}.values()]

        model: dict[str, int] = {}
        for var, lowers, uppers in reversed(stack):
            lo = None
            hi = None
            for b, beta in lowers:
                v = -(-_eval_poly(beta, model) // b)  # ceil
                lo = v if lo is None else max(lo, v)
            for a, alpha in uppers:
                v = _eval_poly(alpha, model) // a  # floor
                hi = v if hi is None else min(hi, v)
            if lo is not None:
                model[var] = lo
            elif hi is not None:
                model[var] = hi
            else:
                model[var] = 0
            if lo is not None and hi is not None and lo > hi:
                return ("unknown", None)
        return ("sat-exact" if exact and not dark else "sat-approx", model)


def _bounds_add(bounds: dict, tag: str, poly: Poly) -> bool:
    """Update the single-atom interval store; False means the branch is
    already infeasible."""
    non_const = [(m, c) for m, c in poly.items() if m != ()]
    if len(non_const) != 1 or len(non_const[0][0]) != 1:
        return True
    (atom,), coeff = non_const[0]
    const = poly.get((), 0)
    lo, hi = bounds.get(atom, (None, None))
    if tag == "eq":
        if const % coeff != 0:
            return False
        v = -const // coeff
        lo = v if lo is None else max(lo, v)
        hi = v if hi is None else min(hi, v)
    elif coeff > 0:  # coeff*a + const <= 0
        v = (-const) // coeff
        hi = v if hi is None else min(hi, v)
    else:
        v = -((-const) // (-coeff))
        lo = v if lo is None else max(lo, v)
    bounds[atom] = (lo, hi)
    return lo is None or hi is None or lo <= hi


def _sign_normal(p: Poly) -> Poly:
    """Flip an equation's sign so p == 0 and -p == 0 share one key."""
    for m in sorted(p):
        if p[m] < 0:
            return _pscale(p, -1)
        if p[m] > 0:
            return p
    return p


def _judge_part(part, bools: dict[str, bool]) -> tuple[bool, bool]:
    """(keep, satisfied) for a disjunct under the current assignment."""
    tag = part[0]
    if tag == "bvar":
        _, name, pol = part
        if name in bools:
            return False, bools[name] == pol
        return True, False
    if tag in ("le", "eq"):
        c = _const_of(part[1])
        if c is not None:
            ok = (c <= 0) if tag == "le" else (c == 0)
            return False, ok
        return True, False
    if tag == "and" and not part[1]:
        return False, True
    if tag == "or" and not part[1]:
        return False, False
    return True, False


def _pinned_atoms(ineqs: list[Poly]) -> list[Poly]:
    """Equalities implied by opposing single-atom bounds (lb == ub), e.g.
    a division remainder forced to one value."""
    lbs: dict[str, int] = {}
    ubs: dict[str, int] = {}
    for p in ineqs:
        non_const = [(m, c) for m, c in p.items() if m != ()]
        if len(non_const) != 1 or len(non_const[0][0]) != 1:
            continue
        (atom,), coeff = non_const[0]
        const = p.get((), 0)
        if coeff > 0:  # coeff*a + const <= 0  =>  a <= floor(-const/coeff)
            ub = (-const) // coeff
            if atom not in ubs or ub < ubs[atom]:
                ubs[atom] = ub
        else:  # a >= ceil(const/-coeff)
            lb = -((-const) // (-coeff))
            if atom not in lbs or lb > lbs[atom]:
                lbs[atom] = lb
    out = []
    for atom, lb in lbs.items():
        if ubs.get(atom) == lb:
            out.append(_padd(_pvar(atom), _pconst(-lb)))
    return out


def _tighten(p: Poly) -> Poly:
    g = 0
    for m, c in p.items():
        if m != ():
            g = gcd(g, abs(c))
    if g <= 1:
        return p
    const = p.get((), 0)
    out = {m: c // g for m, c in p.items() if m != ()}
    newc = -((-const) // g)  # ceil(const / g)
    if newc:
        out[()] = newc
    return out


def _atoms_of_all(ineqs: list[Poly]) -> set[str]:
    out: set[str] = set()
    for p in ineqs:
        out |= _atoms_of(p)
    return out


def _pick_var(ineqs: list[Poly], atoms: list[str]) -> str:
    best = None
    best_cost = None
    for a in atoms:
        lo = sum(1 for p in ineqs if p.get((a,), 0) < 0)
        hi = sum(1 for p in ineqs if p.get((a,), 0) > 0)
        cost = lo * hi
        if best_cost is None or cost < best_cost:
            best, best_cost = a, cost
    assert best is not None
    return best


def _eval_poly(p: Poly, model: dict[str, int]) -> int:
    total = 0
    for m, c in p.items():
        v = c
        for a in m:
            v *= model.get(a, 0)
        total += v
    return total


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def decide(var_sorts: dict[str, BaseType], fun_sorts: dict[str, BaseType],
           quantified_axioms: list[LogicalExpr],
           ground: list[LogicalExpr], negated_goal: LogicalExpr,
           timeout_ms: int) -> Result:
    """Satisfiability of ground /\\ axioms /\\ negated_goal, reported as a
    validity verdict for the caller's original implication."""
    deadline = time.monotonic() + timeout_ms / 1000.0
    fl = _Flattener(dict(var_sorts), dict(fun_sorts))

    instances = _instantiate(quantified_axioms, var_sorts, ground + [negated_goal])
    conjuncts = instances + list(ground) + [negated_goal]
    try:
        base = [fl.tr_bool(e, True) for e in conjuncts]
        base += fl.side
    except Unsupported as exc:
        return Result("unknown", reason=str(exc))

    # Lazy function congruence: solve without Ackermann clauses and add the
    # clauses for violated pairs only when a model actually violates them.
    pending_pairs = fl.congruence_pairs()
    active: list = []
    res = Result("unknown", reason="congruence loop did not run")
    for _ in range(len(pending_pairs) + 1):
        try:
            search = _Search(deadline, fl.bool_defs)
            res = search.solve(base + active, {}, [], [])
        except Unsupported as exc:
            return Result("unknown", reason=str(exc))
        except _Timeout:
            return Result("unknown", reason="timeout")
        if res.status != "invalid":
            return res
        violated = _violated_pairs(fl, pending_pairs, res.model or {})
        if not violated:
            break
        for pair in violated:
            pending_pairs.remove(pair)
            active.append(fl.congruence_clause(*pair))

    # A countermodel must be re-checked against the original formula; with
    # quantified axioms present, finite instantiation cannot justify it.
    if quantified_axioms:
        return Result("unknown", reason="countermodel under quantified axioms")
    verified = _verify_model(res.model or {}, conjuncts, var_sorts, fl)
    if verified is None:
        return Result("unknown", reason="countermodel not verifiable")
    return Result("invalid", model=verified)


def _violated_pairs(fl: _Flattener, pairs: list[tuple[int, int]],
                    model: dict[str, object]) -> list[tuple[int, int]]:
    out = []
    for i, j in pairs:
        a1, _n1, args1, b1 = fl.fun_atoms[i]
        a2, _n2, args2, _b2 = fl.fun_atoms[j]
        vals1 = tuple(_eval_poly_model(p, model) for p in args1)
        vals2 = tuple(_eval_poly_model(p, model) for p in args2)
        if vals1 != vals2:
            continue
        if b1:
            o1 = bool(model.get(f"b:{a1}", False))
            o2 = bool(model.get(f"b:{a2}", False))
        else:
            o1 = int(model.get(a1, 0))  # type: ignore[assignment]
            o2 = int(model.get(a2, 0))  # type: ignore[assignment]
        if o1 != o2:
            out.append((i, j))
    return out


def _fun_apps(e: LogicalExpr, out: list[LFun]) -> None:
    match e:
        case LFun(_, args):
            out.append(e)
            for a in args:
                _fun_apps(a, out)
        case LBin(_, a, b):
            _fun_apps(a, out)
            _fun_apps(b, out)
        case LNot(a):
            _fun_apps(a, out)
        case LIte(c, t, f):
            for part in (c, t, f):
                _fun_apps(part, out)
        case _:
            pass


def _instantiate(axioms: list[LogicalExpr], var_sorts: dict[str, BaseType],
                 ground: list[LogicalExpr]) -> list[LogicalExpr]:
    """Ground instances of universally quantified axioms.

    Candidates per free variable: the declared integer variables, plus
    trigger terms found by matching the axiom's own function applications
    (e.g. `ilog(a)` with free `a`) against applications of the same
    function in the ground formula."""
    int_vars = [LVar(n) for n, s in sorted(var_sorts.items()) if s == INT]
    ground_apps: list[LFun] = []
    for g in ground:
        _fun_apps(g, ground_apps)
    out: list[LogicalExpr] = []
    for ax in axioms:
        fvs = sorted(free_logic_vars(ax))
        if not fvs:
            out.append(ax)
            continue
        if len(fvs) > 2 or not int_vars:
            continue  # instantiating higher arities is not worth the blowup
        candidates: dict[str, list[LogicalExpr]] = {v: list(int_vars) for v in fvs}
        ax_apps: list[LFun] = []
        _fun_apps(ax, ax_apps)
        for app in ax_apps:
            for pos, arg in enumerate(app.args):
                if not isinstance(arg, LVar) or arg.name not in candidates:
                    continue
                for gapp in ground_apps:
                    if gapp.name == app.name and len(gapp.args) == len(app.args):
                        trig = gapp.args[pos]
                        if trig not in candidates[arg.name]:
                            candidates[arg.name].append(trig)
        if len(fvs) == 1:
            for t in candidates[fvs[0]]:
                out.append(subst_logic_many(ax, {fvs[0]: t}))
        else:
            for t1 in candidates[fvs[0]]:
                for t2 in candidates[fvs[1]]:
                    out.append(subst_logic_many(ax, {fvs[0]: t1, fvs[1]: t2}))
    seen = set()
    unique = []
    for e in out:
        if e not in seen:
            seen.add(e)
            unique.append(e)
    return unique


def _verify_model(model: dict[str, object], conjuncts: list[LogicalExpr],
                  var_sorts: dict[str, BaseType],
                  fl: _Flattener) -> Optional[dict[str, object]]:
    env: dict[str, object] = {}
    for name, sort in var_sorts.items():
        if sort == BOOL:
            env[name] = bool(model.get(f"b:{name}", False))
        else:
            env[name] = int(model.get(name, 0))

    table: dict[tuple[str, tuple], object] = {}
    ok = True
    for atom, fname, arg_polys, is_bool in fl.fun_atoms:
        args = tuple(_eval_poly_model(p, model) for p in arg_polys)
        if is_bool:
            val: object = bool(model.get(f"b:{atom}", False))
        else:
            val = int(model.get(atom, 0))
        if (fname, args) in table and table[(fname, args)] != val:
            ok = False
        table[(fname, args)] = val
    if not ok:
        return None

    def funs(name, args):
        key = (name, tuple(args))
        if key not in table:
            raise KeyError(key)
        return table[key]

    try:
        for c in conjuncts:
            if eval_logic(c, env, funs) is not True:
                return None
    except Exception:
        return None
    return {**env, **{f"{n}({', '.join(map(str, a))})": v
                      for (n, a), v in table.items()}}


def _eval_poly_model(p: Poly, model: dict[str, object]) -> int:
    total = 0
    for m, c in p.items():
        v = c
        for a in m:
            av = model.get(a, 0)
            v *= int(av) if not isinstance(av, bool) else int(av)
        total += v
    return total
