"""Concrete small-step cost semantics and the empirical complexity harness.

Cost is consumed exclusively by `tick(c, t)` nodes; primitive operators and
constructors are free.  The interpreter is substitution based and applies
exactly one rule per step; guard and scrutinee positions reduce to a value
inside a single outer step, mirroring the rule set it implements.
"""

from __future__ import annotations

import math
import statistics
import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .lang import (App, Const, Fix, If, LangError, Match, MeasureDef,
                   PRIMITIVES, SizeFunction, SynthesisProblem, Term, Tick,
                   Var, eval_logic, substitute)
from . import pretty


class SemanticsError(Exception):
    pass


class StuckTerm(SemanticsError):
    def __init__(self, term: Term, msg: str):
        super().__init__(f"{msg}: {pretty.print_term(term)}")
        self.term = term


class FuelExhausted(SemanticsError):
    pass


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

class Value:
    __slots__ = ()


@dataclass(frozen=True)
class IntVal(Value):
    value: int


@dataclass(frozen=True)
class BoolVal(Value):
    value: bool


@dataclass(frozen=True)
class DataVal(Value):
    ctor: str
    fields: tuple[Value, ...]


@dataclass(frozen=True)
class Closure(Value):
    fix: Fix


@dataclass(frozen=True)
class Configuration:
    """A term paired with the resource usage accumulated so far."""

    term: Term
    cost: int = 0

    def __post_init__(self):
        if self.cost < 0:
            raise SemanticsError("cost must be nonnegative")


@dataclass(frozen=True)
class CostSample:
    size: int
    cost: int


@dataclass(frozen=True)
class Defs:
    """Resolvable names for evaluation: function bodies and constructors."""

    functions: dict[str, Fix] = field(default_factory=dict)
    constructors: frozenset[str] = frozenset()

    @staticmethod
    def from_problem(problem: SynthesisProblem,
                     extra: Optional[dict[str, Fix]] = None,
                     ticked: bool = True) -> "Defs":
        """Definitions for running programs of a problem.  Auxiliary
        implementations without explicit ticks are wrapped in tick(1, .)
        so each auxiliary call costs one unit."""
        funs: dict[str, Fix] = {}
        for aux in problem.auxiliaries:
            if aux.impl is None:
                continue
            funs[aux.name] = wrap_ticked(aux.impl) if ticked else aux.impl
        if extra:
            funs.update(extra)
        ctors = frozenset(c.name for dt in problem.datatypes for c in dt.ctors)
        return Defs(funs, ctors)


def contains_tick(t: Term) -> bool:
    match t:
        case Tick(_, _):
            return True
        case App(_, args):
            return any(contains_tick(a) for a in args)
        case If(c, a, b):
            return contains_tick(c) or contains_tick(a) or contains_tick(b)
        case Match(s, cases):
            return contains_tick(s) or any(contains_tick(c.body) for c in cases)
        case Fix(_, _, body):
            return contains_tick(body)
        case _:
            return False


def wrap_ticked(f: Fix) -> Fix:
    if contains_tick(f.body):
        return f
    return Fix(f.name, f.params, Tick(1, f.body))


def is_value(t: Term, defs: Defs) -> bool:
    match t:
        case Const(_):
            return True
        case Fix(_, _, _):
            return True
        case App(head, args):
            return head in defs.constructors and all(is_value(a, defs)
                                                     for a in args)
        case _:
            return False


def term_to_value(t: Term, defs: Defs) -> Value:
    match t:
        case Const(v) if isinstance(v, bool):
            return BoolVal(v)
        case Const(v):
            return IntVal(v)
        case Fix(_, _, _):
            return Closure(t)
        case App(head, args) if head in defs.constructors:
            return DataVal(head, tuple(term_to_value(a, defs) for a in args))
    raise SemanticsError(f"not a value: {pretty.print_term(t)}")


def value_to_term(v: Value) -> Term:
    match v:
        case IntVal(n):
            return Const(n)
        case BoolVal(b):
            return Const(b)
        case DataVal(ctor, fields):
            return App(ctor, tuple(value_to_term(f) for f in fields))
        case Closure(fix):
            return fix
    raise SemanticsError(f"not a value: {v!r}")


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, amount: int):
        self.left = amount

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise FuelExhausted("step budget exhausted")


def _apply_primitive(head: str, args: tuple[Term, ...], t: Term) -> Term:
    vals = []
    for a in args:
        if not isinstance(a, Const):
            raise StuckTerm(t, "primitive applied to non-constant")
        vals.append(a.value)
    try:
        match head:
            case "+": r = vals[0] + vals[1]
            case "-": r = vals[0] - vals[1]
            case "*": r = vals[0] * vals[1]
            case "/":
                if vals[1] <= 0:
                    raise StuckTerm(t, "division by nonpositive divisor")
                r = vals[0] // vals[1]
            case "mod":
                if vals[1] <= 0:
                    raise StuckTerm(t, "mod by nonpositive divisor")
                r = vals[0] % vals[1]
            case "==": r = vals[0] == vals[1]
            case "!=": r = vals[0] != vals[1]
            case "<=": r = vals[0] <= vals[1]
            case "<": r = vals[0] < vals[1]
            case ">=": r = vals[0] >= vals[1]
            case ">": r = vals[0] > vals[1]
            case "and": r = vals[0] and vals[1]
            case "or": r = vals[0] or vals[1]
            case "not": r = not vals[0]
            case _:
                raise StuckTerm(t, f"unknown primitive {head}")
    except IndexError:
        raise StuckTerm(t, f"primitive {head} arity error")
    return Const(r)


def step(cfg: Configuration, defs: Defs,
         fuel: Optional[_Fuel] = None) -> Configuration:
    """Apply exactly one evaluation rule.

    Guard and scrutinee reductions run to completion inside this call (their
    accumulated cost is charged to the resulting configuration), matching
    the single-step judgments for conditionals and match.
    """
    if fuel is not None:
        fuel.spend()
    t = cfg.term
    if is_value(t, defs):
        raise StuckTerm(t, "step applied to a value")
    match t:
        case Tick(c, body):
            return Configuration(body, cfg.cost + c)
        case If(Const(cv), a, b) if isinstance(cv, bool):
            return Configuration(a if cv else b, cfg.cost)
        case If(cond, a, b):
            guard, delta = _reduce_to_value(cond, defs, fuel)
            if not (isinstance(guard, Const) and isinstance(guard.value, bool)):
                raise StuckTerm(t, "condition did not evaluate to a boolean")
            return Configuration(If(guard, a, b), cfg.cost + delta)
        case Match(scrut, cases):
            if is_value(scrut, defs):
                if not (isinstance(scrut, App)
                        and scrut.head in defs.constructors):
                    raise StuckTerm(t, "match on a non-constructor value")
                for case in cases:
                    if case.ctor == scrut.head:
                        if len(case.binders) != len(scrut.args):
                            raise StuckTerm(t, "pattern arity mismatch")
                        body = case.body
                        for b, v in zip(case.binders, scrut.args):
                            body = substitute(body, b, v)
                        return Configuration(body, cfg.cost)
                raise StuckTerm(t, f"no case for constructor {scrut.head}")
            reduced, delta = _reduce_to_value(scrut, defs, fuel)
            return Configuration(Match(reduced, cases), cfg.cost + delta)
        case App(head, args):
            idx = next((i for i, a in enumerate(args)
                        if not is_value(a, defs)), None)
            if idx is not None:
                sub = step(Configuration(args[idx], 0), defs, fuel)
                new_args = args[:idx] + (sub.term,) + args[idx + 1:]
                return Configuration(App(head, new_args), cfg.cost + sub.cost)
            if head in PRIMITIVES:
                return Configuration(_apply_primitive(head, args, t), cfg.cost)
            fn = defs.functions.get(head)
            if fn is None:
                raise StuckTerm(t, f"unresolvable function {head}")
            if len(fn.params) != len(args):
                raise StuckTerm(t, f"{head} expects {len(fn.params)} arguments")
            body = fn.body
            for p, v in zip(fn.params, args):
                body = substitute(body, p, v)
            return Configuration(body, cfg.cost)
        case Var(name):
            fn = defs.functions.get(name)
            if fn is not None:
                return Configuration(fn, cfg.cost)
            raise StuckTerm(t, f"unbound variable {name}")
    raise StuckTerm(t, "no rule applies")


def _reduce_to_value(t: Term, defs: Defs,
                     fuel: Optional[_Fuel]) -> tuple[Term, int]:
    cfg = Configuration(t, 0)
    while not is_value(cfg.term, defs):
        cfg = step(cfg, defs, fuel)
    return cfg.term, cfg.cost


def eval_term(t: Term, defs: Defs, fuel: int = 10 ** 7) -> tuple[Value, int]:
    """Iterate `step` to a value; returns (value, total cost)."""
    box = _Fuel(fuel)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100_000))
    try:
        cfg = Configuration(t, 0)
        while not is_value(cfg.term, defs):
            cfg = step(cfg, defs, box)
        return term_to_value(cfg.term, defs), cfg.cost
    finally:
        sys.setrecursionlimit(limit)


# ---------------------------------------------------------------------------
# Logical interpretation over runtime values
# ---------------------------------------------------------------------------

def logic_interpreter(problem: SynthesisProblem,
                      extension: Optional[Callable] = None
                      ) -> Callable[[str, tuple], object]:
    """Interpretation of measures and constructors over runtime values, used
    to evaluate size functions and refinements on concrete inputs.

    `extension`, when given, is consulted first and may return
    NotImplemented to fall through to the standard interpretation."""

    ctor_names = {c.name for dt in problem.datatypes for c in dt.ctors}

    def interp(name: str, args: tuple):
        if extension is not None:
            out = extension(name, args)
            if out is not NotImplemented:
                return out
        if name in ctor_names:
            return DataVal(name, tuple(args))
        m = problem.measure(name)
        if m is None:
            raise LangError(f"no interpretation for {name}")
        if not m.clauses:
            raise LangError(f"measure {name} is uninterpreted")
        subject_index = m.clauses[0].subject_index
        subject = args[subject_index]
        if not isinstance(subject, DataVal):
            raise LangError(f"measure {name} applied to non-data value")
        clause = m.clause_for(subject.ctor)
        if clause is None:
            raise LangError(f"measure {name} has no clause for {subject.ctor}")
        env: dict[str, object] = {}
        others = [a for i, a in enumerate(args) if i != subject_index]
        for p, v in zip(clause.params, others):
            env[p] = _unwrap(v)
        for f, v in zip(clause.fields, subject.fields):
            env[f] = _unwrap(v)
        return eval_logic(clause.rhs, env, interp)

    return interp


def _unwrap(v):
    if isinstance(v, IntVal):
        return v.value
    if isinstance(v, BoolVal):
        return v.value
    return v


def _wrap_arg(v):
    if isinstance(v, bool):
        return BoolVal(v)
    if isinstance(v, int):
        return IntVal(v)
    return v


def eval_size(size_fn: SizeFunction, args: Iterable[Value],
              problem: SynthesisProblem) -> int:
    env = {p: _unwrap(a) for p, a in zip(size_fn.params, args)}
    out = eval_logic(size_fn.body, env, logic_interpreter(problem))
    if not isinstance(out, int) or isinstance(out, bool) or out < 0:
        raise SemanticsError(f"size function produced {out!r}")
    return out


# ---------------------------------------------------------------------------
# Complexity harness
# ---------------------------------------------------------------------------

def measure(f: Fix, defs: Defs, size_f: SizeFunction,
            inputs: Iterable[tuple[Value, ...]], problem: SynthesisProblem,
            fuel: int = 10 ** 7) -> list[CostSample]:
    """Run `f` on each input tuple and record, per distinct size value, the
    maximum observed cost.  The supremum over all same-size inputs is
    approximated by the sampled maximum."""
    run_defs = Defs({**defs.functions, f.name: f}, defs.constructors)
    by_size: dict[int, int] = {}
    for tup in inputs:
        size = eval_size(size_f, tup, problem)
        call = App(f.name, tuple(value_to_term(v) for v in tup))
        _, cost = eval_term(call, run_defs, fuel)
        by_size[size] = max(by_size.get(size, 0), cost)
    return [CostSample(s, c) for s, c in sorted(by_size.items())]


@dataclass(frozen=True)
class FitResult:
    passed: bool
    witness: float  # max tail ratio M such that cost <= M * bound(size)


TAIL_RATIO_SLACK = 1.25


def fit_bound(samples: list[CostSample], bound) -> FitResult:
    """Heuristic acceptance of a big-O claim: over the upper half of sizes,
    the max of cost/bound(size) must stay within 1.25x of its median.

    Requires at least 8 samples spanning at least 3 doublings of size.
    """
    if len(samples) < 8:
        raise ValueError("need at least 8 cost samples")
    samples = sorted(samples, key=lambda s: s.size)
    smallest = max(samples[0].size, 1)
    if samples[-1].size < 8 * smallest:
        raise ValueError("samples must span at least 3 doublings of size")
    tail = samples[len(samples) // 2:]
    ratios = [s.cost / bound.evaluate(s.size) for s in tail]
    peak = max(ratios)
    med = statistics.median(ratios)
    passed = peak <= TAIL_RATIO_SLACK * med
    return FitResult(passed, peak)
