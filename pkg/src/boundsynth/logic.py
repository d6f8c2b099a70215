"""Validity checking, big-O class comparison, and polynomial-boundedness
of refinements.

The checker answers queries of the form "does hypothesis imply conclusion
under these axioms, for all values of the declared variables".  Backends:

  * the built-in engine (default; see intsolve), and
  * an external solver subprocess over the standard SMT-LIB2 text format,
    selected by passing a solver command.

An `unknown` verdict is conservative: every caller treats it as rejection.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from . import intsolve
from .lang import (BOOL, BaseType, BoundExpr, INT, LBin, LBool, LFun, LInt,
                   LIte, LNot, LVar, LogicalExpr, NU, VALUE_VAR,
                   free_logic_vars, land)
from .smtproc import SolverError, SolverProcess

DEFAULT_TIMEOUT_MS = 10_000

# Candidate witnesses for the existential constants in the polynomial
# boundedness check, tried smallest first.
POLY_BOUND_LADDER = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class Verdict:
    status: str  # "valid" | "invalid" | "unknown"
    model: Optional[dict] = None
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status == "valid"

    @property
    def is_invalid(self) -> bool:
        return self.status == "invalid"

    @property
    def is_unknown(self) -> bool:
        return self.status == "unknown"


def Valid() -> Verdict:
    return Verdict("valid")


def Invalid(model: Optional[dict] = None) -> Verdict:
    return Verdict("invalid", model=model or {})


def Unknown(reason: str = "") -> Verdict:
    return Verdict("unknown", reason=reason)


@dataclass(frozen=True)
class ValidityQuery:
    """hypothesis ==> conclusion, universally closed over the declared
    variables, under the given axioms.

    Axioms with free variables are themselves universally quantified.
    Measures are uninterpreted functions over Int (datatype values are
    abstracted to Int); the result sort accompanies the arity so
    boolean-valued measures can be declared.
    """

    variables: tuple[tuple[str, BaseType], ...]
    measures: tuple[tuple[str, int, BaseType], ...]
    axioms: tuple[LogicalExpr, ...]
    hypothesis: LogicalExpr
    conclusion: LogicalExpr

    def declared(self) -> set[str]:
        return {n for n, _ in self.variables}

    def validate(self) -> None:
        declared = self.declared()
        for label, e in (("hypothesis", self.hypothesis),
                         ("conclusion", self.conclusion)):
            loose = free_logic_vars(e) - declared
            if loose:
                raise ValueError(f"undeclared variables {sorted(loose)} "
                                 f"in {label}")


# ---------------------------------------------------------------------------
# Query serialization (external interface)
# ---------------------------------------------------------------------------

def _smt_sort(s: BaseType) -> str:
    return "Bool" if s == BOOL else "Int"


def _smt(e: LogicalExpr) -> str:
    match e:
        case LVar(name):
            return _smt_sym(name)
        case LInt(v):
            return str(v) if v >= 0 else f"(- {-v})"
        case LBool(v):
            return "true" if v else "false"
        case LFun(name, args):
            inner = " ".join(_smt(a) for a in args)
            return f"({_smt_sym(name)} {inner})" if args else _smt_sym(name)
        case LNot(a):
            return f"(not {_smt(a)})"
        case LIte(c, t, f):
            return f"(ite {_smt(c)} {_smt(t)} {_smt(f)})"
        case LBin("cdiv", a, b):
            bs = _smt(b)
            return f"(div (+ {_smt(a)} (- {bs} 1)) {bs})"
        case LBin(op, a, b):
            smt_op = {"+": "+", "-": "-", "*": "*", "div": "div",
                      "mod": "mod", "==": "=", "!=": "distinct",
                      "<=": "<=", "<": "<", ">=": ">=", ">": ">",
                      "and": "and", "or": "or", "==>": "=>"}[op]
            return f"({smt_op} {_smt(a)} {_smt(b)})"
    raise ValueError(f"not a logical expression: {e!r}")


def _smt_sym(name: str) -> str:
    return f"|{name}|" if any(ch in name for ch in "!@.'") else name


def emit_query(q: ValidityQuery) -> str:
    """Deterministic SMT-LIB2 serialization: structurally equal queries
    produce byte-identical output."""
    lines = ["(set-logic ALL)"]
    for name, sort in q.variables:
        lines.append(f"(declare-const {_smt_sym(name)} {_smt_sort(sort)})")
    for name, arity, result in q.measures:
        doms = " ".join(["Int"] * arity)
        lines.append(f"(declare-fun {_smt_sym(name)} ({doms}) "
                     f"{_smt_sort(result)})")
    for ax in q.axioms:
        fvs = sorted(free_logic_vars(ax) - q.declared())
        if fvs:
            binders = " ".join(f"({_smt_sym(v)} Int)" for v in fvs)
            lines.append(f"(assert (forall ({binders}) {_smt(ax)}))")
        else:
            lines.append(f"(assert {_smt(ax)})")
    lines.append(f"(assert {_smt(q.hypothesis)})")
    lines.append(f"(assert (not {_smt(q.conclusion)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------

class LogicChecker:
    """Validity checker with a per-instance solver backend and query cache.

    An instance is used by one thread at a time; independent instances may
    run in parallel.
    """

    def __init__(self, solver_cmd: Optional[list[str]] = None,
                 timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 cache_size: int = 200_000):
        self.solver_cmd = solver_cmd
        self.timeout_ms = timeout_ms
        self._proc: Optional[SolverProcess] = None
        self._cache: OrderedDict[str, Verdict] = OrderedDict()
        self._cache_size = cache_size
        self.queries_total = 0
        self.backend_calls = 0

    def close(self) -> None:
        if self._proc is not None:
            self._proc.close()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- validity -----------------------------------------------------------

    def check_validity(self, q: ValidityQuery,
                       timeout_ms: Optional[int] = None) -> Verdict:
        q.validate()
        self.queries_total += 1
        key = emit_query(q)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        self.backend_calls += 1
        budget = timeout_ms if timeout_ms is not None else self.timeout_ms
        if self.solver_cmd is not None:
            verdict = self._check_external(q, key)
        else:
            verdict = self._check_internal(q, budget)
        if not (verdict.is_unknown and verdict.reason == "timeout"):
            # a longer budget may settle a timed-out query later
            if len(self._cache) >= self._cache_size:
                self._cache.popitem(last=False)
            self._cache[key] = verdict
        return verdict

    def _check_internal(self, q: ValidityQuery, timeout_ms: int) -> Verdict:
        var_sorts = dict(q.variables)
        fun_sorts = {name: result for name, _arity, result in q.measures}
        declared = q.declared()
        quantified = [ax for ax in q.axioms if free_logic_vars(ax) - declared]
        ground = [ax for ax in q.axioms if not (free_logic_vars(ax) - declared)]
        ground.append(q.hypothesis)
        res = intsolve.decide(var_sorts, fun_sorts, quantified, ground,
                              LNot(q.conclusion), timeout_ms)
        if res.status == "valid":
            return Valid()
        if res.status == "invalid":
            return Invalid(res.model)
        return Unknown(res.reason)

    def _check_external(self, q: ValidityQuery, query_text: str) -> Verdict:
        if self._proc is None:
            self._proc = SolverProcess(self.solver_cmd)
        status = self._proc.check(query_text)
        if status == "unsat":
            return Valid()
        if status == "unknown":
            return Unknown("solver returned unknown")
        try:
            model = self._proc.get_values(
                [name for name, _ in q.variables])
        except SolverError:
            model = {}
        return Invalid(model)

    # -- big-O comparison -----------------------------------------------------

    @staticmethod
    def check_big_o(psi: BoundExpr, psi2: BoundExpr) -> bool:
        """True iff the class of psi is contained in the class of psi2,
        decided symbolically on the canonical (a, b) exponents.  Constant
        classes are dominated by everything."""
        if psi.a == 0 and psi.b == 0:
            return True
        if psi.a < psi2.a:
            return True
        return psi.a == psi2.a and psi.b <= psi2.b

    # -- polynomial boundedness -------------------------------------------

    def check_poly_bound(self, phi: LogicalExpr,
                         params: tuple[tuple[str, BaseType], ...],
                         p: LogicalExpr,
                         measures: tuple[tuple[str, int, BaseType], ...] = (),
                         axioms: tuple[LogicalExpr, ...] = (),
                         timeout_ms: Optional[int] = None) -> Verdict:
        """Is the refinement phi (over v and the given parameters) bounded
        by the polynomial p, i.e. does some positive constant vector make
        `params > c /\\ phi` imply `|v| < p`?

        The existential is discharged by instantiating the candidate ladder
        uniformly across components; valid on the first witness, otherwise
        unknown.
        """
        variables = ((VALUE_VAR, INT),) + tuple(params)
        conclusion = land(LBin("<", NU, p),
                          LBin("<", LBin("-", LInt(0), NU), p))
        for c in POLY_BOUND_LADDER:
            above = [LBin(">", LVar(n), LInt(c)) for n, s in params if s == INT]
            hyp = land(*above, phi)
            q = ValidityQuery(variables, measures, axioms, hyp, conclusion)
            verdict = self.check_validity(q, timeout_ms)
            if verdict.is_valid:
                return Valid()
        return Unknown("no ladder constant witnesses the bound")
