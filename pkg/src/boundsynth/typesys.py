"""Annotated-refinement-type checking.

Implements subtyping, cost sharing, the pattern table connecting body
annotations to asymptotic bounds, and the checking of branching terms and
application terms against annotated goals.  All semantic questions bottom
out in validity queries against the logic module; `unknown` verdicts are
treated as rejection everywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .lang import (AnnotatedType, App, ArrowType, AuxDecl, BOOL, BaseType,
                   BoundExpr, Const, CORR_VAR, DataType, Environment, FALSE,
                   Fix, If, INT, LBin, LBool, LFun, LInt, LVar, LogicalExpr,
                   Match, MU, NU, O1, O_LOG, O_N, O_N2, O_NLOG, PRIMITIVES,
                   RecCost, RecurrenceAnnotation, RefinementType, ScalarType,
                   SizeFunction, SynthesisProblem, Term, Tick, TRUE, Var,
                   eq, free_logic_vars, land, subst_logic, subst_logic_many,
                   substitute)
from .logic import LogicChecker, ValidityQuery, Verdict
from . import pretty

FRESH_MARK = "!"


class TypingError(Exception):
    pass


@dataclass(frozen=True)
class TypingGoal:
    env: Environment
    type: AnnotatedType


# ---------------------------------------------------------------------------
# Pattern table: body annotations that justify a function bound
# ---------------------------------------------------------------------------

MASTER_LOG = "Master-log"
MASTER_NLOGN = "Master-nlogn"
AKRA_BAZZI = "AkraBazzi-split"
CFINITE_LINEAR = "CFinite-linear"
CFINITE_QUADRATIC = "CFinite-quadratic"
TREE_CORRELATED = "Tree-correlated"
NON_RECURSIVE = "NonRecursive"

PATTERN_LETTERS = {
    MASTER_LOG: "M",
    MASTER_NLOGN: "M",
    AKRA_BAZZI: "A",
    CFINITE_LINEAR: "C",
    CFINITE_QUADRATIC: "C",
    TREE_CORRELATED: "T",
    NON_RECURSIVE: "N",
}


@dataclass(frozen=True)
class Pattern:
    """One instantiated table row: if the function body satisfies
    `annotation`, the function satisfies `bound`."""

    id: str
    bound: BoundExpr
    annotation: RecurrenceAnnotation
    d: int = 0

    @property
    def letter(self) -> str:
        return PATTERN_LETTERS[self.id]


def _udiv(d: int) -> LogicalExpr:
    return LBin("div", MU, LInt(d))


def _ucdiv(d: int) -> LogicalExpr:
    return LBin("cdiv", MU, LInt(d))


def _usub(d: int) -> LogicalExpr:
    return LBin("-", MU, LInt(d))


def match_patterns(bound: BoundExpr,
                   divide_ds: tuple[int, ...] = (2, 3),
                   subtract_ds: tuple[int, ...] = (1, 2)) -> list[Pattern]:
    """All body annotations whose bound column equals `bound`, ordered by
    fewest recursive calls first (table order breaking ties), with the
    non-recursive fallback appended last."""
    rows: list[tuple[int, int, Pattern]] = []  # (total calls, table row, pat)
    a, b = bound.a, bound.b

    if (a, b) == (Fraction(0), 1):  # O(log u)
        for d in divide_ds:
            if d >= 2:
                ann = RecurrenceAnnotation((RecCost(1, _udiv(d)),), O1)
                rows.append((1, 0, Pattern(MASTER_LOG, O_LOG, ann, d)))
    if (a, b) == (Fraction(1), 1):  # O(u log u)
        for d in divide_ds:
            if d >= 2:
                ann = RecurrenceAnnotation((RecCost(d, _udiv(d)),), O_N)
                rows.append((d, 1, Pattern(MASTER_NLOGN, O_NLOG, ann, d)))
        ann = RecurrenceAnnotation((RecCost(1, _ucdiv(2)), RecCost(1, _udiv(2))),
                                   O_N)
        rows.append((2, 2, Pattern(AKRA_BAZZI, O_NLOG, ann)))
    if (a, b) == (Fraction(1), 0):  # O(u)
        for d in subtract_ds:
            if d >= 1:
                ann = RecurrenceAnnotation((RecCost(1, _usub(d)),), O1)
                rows.append((1, 3, Pattern(CFINITE_LINEAR, O_N, ann, d)))
        corr = RecurrenceAnnotation(
            (RecCost(1, LVar(CORR_VAR)),
             RecCost(1, LBin("-", _usub(1), LVar(CORR_VAR)))), O1)
        rows.append((2, 5, Pattern(TREE_CORRELATED, O_N, corr)))
    if (a, b) == (Fraction(2), 0):  # O(u^2)
        for d in subtract_ds:
            if d >= 1:
                ann = RecurrenceAnnotation((RecCost(1, _usub(d)),), O_N)
                rows.append((1, 4, Pattern(CFINITE_QUADRATIC, O_N2, ann, d)))

    rows.sort(key=lambda r: (r[0], r[1], r[2].d))
    out = [p for _, _, p in rows]
    out.append(Pattern(NON_RECURSIVE, bound, RecurrenceAnnotation((), bound)))
    return out


# ---------------------------------------------------------------------------
# Cost sharing
# ---------------------------------------------------------------------------

def _partitions(total: int, ways: int) -> list[tuple[int, ...]]:
    """All nonnegative `ways`-tuples with componentwise sum <= total,
    ordered so the zero-first, rest-maximal tuple comes first (guards get
    no recursive calls, branches keep the full budget)."""
    outs = []
    for combo in itertools.product(range(total + 1), repeat=ways):
        if sum(combo) <= total:
            outs.append(combo)
    outs.sort(key=lambda p: (p[0],) + tuple(-x for x in p[1:]))
    return outs


def share(env: Environment, ann: RecurrenceAnnotation,
          ways: int = 2) -> Iterator[tuple[RecurrenceAnnotation, ...]]:
    """All ways of splitting the recursive-call budget among `ways` parts;
    the bound is copied to every part."""
    if ways < 2:
        raise TypingError("share needs at least 2 ways")
    per_entry = [_partitions(rc.count, ways) for rc in ann.costs]
    if not ann.costs:
        yield tuple(RecurrenceAnnotation((), ann.bound) for _ in range(ways))
        return
    for choice in itertools.product(*per_entry):
        parts = []
        for w in range(ways):
            costs = tuple(RecCost(choice[i][w], rc.size)
                          for i, rc in enumerate(ann.costs))
            parts.append(RecurrenceAnnotation(costs, ann.bound))
        yield tuple(parts)


def update_cost(ann: RecurrenceAnnotation,
                used: tuple[RecCost, ...]) -> RecurrenceAnnotation:
    """Subtract used recursive-call counts entrywise (matched by size
    expression); the bound is unchanged."""
    counts = [rc.count for rc in ann.costs]
    for u in used:
        for i, rc in enumerate(ann.costs):
            if rc.size == u.size:
                counts[i] -= u.count
                break
        else:
            raise TypingError(f"no cost entry with size "
                              f"{pretty.print_logic(u.size)}")
    if any(c < 0 for c in counts):
        raise TypingError("recursive-call budget over-subscribed")
    return ann.with_counts(tuple(counts))


# ---------------------------------------------------------------------------
# E-term inference
# ---------------------------------------------------------------------------

@dataclass
class _RecCallInfo:
    size: LogicalExpr          # size of the called subproblem
    order: int                 # textual position among recursive calls
    known: int                 # prefix of facts justified before this call


@dataclass
class _AuxCallInfo:
    name: str
    bound: BoundExpr
    size: Optional[LogicalExpr]  # size of the called subproblem, if sized
    known: int


@dataclass
class _EInf:
    base: BaseType
    value: LogicalExpr                       # expression denoting the value
    facts: list[LogicalExpr] = field(default_factory=list)
    fresh: list[tuple[str, BaseType]] = field(default_factory=list)
    rec_calls: list[_RecCallInfo] = field(default_factory=list)
    aux_calls: list[_AuxCallInfo] = field(default_factory=list)
    arg_checks: list[tuple[LogicalExpr, str, int]] = field(default_factory=list)
    # (obligation, description, justified-fact prefix).  Each obligation of
    # a call may rely only on facts derived inside the call's arguments;
    # the call's own result refinement is concluded, never assumed, which
    # keeps absurd calls (e.g. out-of-domain recursion) refutable.


class _Fresh:
    def __init__(self, start: int):
        self.n = start

    def take(self) -> str:
        self.n += 1
        return f"z{FRESH_MARK}{self.n}"


def is_fresh_name(name: str) -> bool:
    return FRESH_MARK in name


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------

@dataclass
class Failure:
    stage: str
    detail: str

    def __str__(self):
        return f"{self.stage}: {self.detail}"


class TypeChecker:
    """Checks terms against annotated types for one synthesis problem.

    Owns a logic checker; one instance per thread.
    """

    def __init__(self, problem: SynthesisProblem,
                 logic: Optional[LogicChecker] = None,
                 divide_ds: tuple[int, ...] = (2, 3),
                 subtract_ds: tuple[int, ...] = (1, 2)):
        self.problem = problem
        self.logic = logic or LogicChecker()
        self.divide_ds = divide_ds
        self.subtract_ds = subtract_ds
        self.last_failure: Optional[Failure] = None
        self.pattern_failures: list[tuple[str, Optional[Failure]]] = []
        self._measure_decls = tuple(
            (m.name, m.arity, m.result_sort) for m in problem.measures)
        self._ctor_owner = {c.name: dt for dt in problem.datatypes
                            for c in dt.ctors}

    # -- environments -------------------------------------------------------

    def base_environment(self) -> Environment:
        env = Environment(size_fns=tuple(self.problem.size_fns))
        for aux in self.problem.auxiliaries:
            env = env.bind(aux.name, AnnotatedType(
                aux.type, RecurrenceAnnotation((), aux.bound)))
        return env

    def goal_environment(self) -> tuple[Environment, ScalarType]:
        """T-Abs setup: recFun/args recorded, parameters bound, and the
        goal function bound at its arrow type."""
        p = self.problem
        env = self.base_environment()
        env = env.with_recursion(p.goal_name, p.goal_type.param_names)
        for name, ty in p.goal_type.params:
            env = env.bind(name, AnnotatedType.plain(ty))
        env = env.bind(p.goal_name, AnnotatedType(
            p.goal_type, RecurrenceAnnotation((), p.goal_bound)))
        return env, p.goal_type.result

    # -- queries ------------------------------------------------------------

    def _scalar_sort(self, base: BaseType) -> BaseType:
        return BOOL if base == BOOL else INT

    def _env_facts(self, env: Environment) -> tuple[
            list[tuple[str, BaseType]], list[LogicalExpr]]:
        variables: list[tuple[str, BaseType]] = []
        facts: list[LogicalExpr] = []
        seen = set()
        for name, aty in env.bindings:
            if isinstance(aty.type, ArrowType) or name in seen:
                continue
            seen.add(name)
            scalar = aty.type
            variables.append((name, self._scalar_sort(scalar.base)))
            if scalar.refinement != TRUE:
                facts.append(subst_logic(scalar.refinement, NU.name, LVar(name)))
            if isinstance(scalar.base, DataType):
                dt = self.problem.datatype(scalar.base.name)
                facts.append(LBin(">=", LFun(dt.intrinsic_measure,
                                             (LVar(name),)), LInt(0)))
        facts.extend(env.path_conditions)
        return variables, facts

    def _query(self, env: Environment, extra_vars, extra_facts,
               conclusion: LogicalExpr) -> ValidityQuery:
        variables, facts = self._env_facts(env)
        names = {n for n, _ in variables}
        for n, s in extra_vars:
            if n not in names:
                variables.append((n, self._scalar_sort(s)))
                names.add(n)
                if isinstance(s, DataType):
                    dt = self.problem.datatype(s.name)
                    facts.append(LBin(">=", LFun(dt.intrinsic_measure,
                                                 (LVar(n),)), LInt(0)))
        facts.extend(extra_facts)
        return ValidityQuery(tuple(variables), self._measure_decls,
                             tuple(self.problem.axioms), land(*facts),
                             conclusion)

    def _valid(self, env: Environment, extra_vars, extra_facts,
               conclusion: LogicalExpr) -> bool:
        q = self._query(env, extra_vars, extra_facts, conclusion)
        return self.logic.check_validity(q).is_valid

    def path_satisfiable(self, env: Environment) -> bool:
        """Is the environment's path feasible?  (Used to discard degenerate
        branch guards.)"""
        q = self._query(env, (), (), FALSE)
        return self.logic.check_validity(q).is_invalid

    # -- size expressions ---------------------------------------------------

    def _current_size(self, env: Environment) -> LogicalExpr:
        if env.rec_fun is None or env.args is None:
            raise TypingError("no recursion point in the environment")
        size_fn = env.size_fn(env.rec_fun) or self.problem.size_fn(env.rec_fun)
        if size_fn is None:
            raise TypingError(f"no size function for {env.rec_fun}")
        return size_fn.apply(tuple(LVar(a) for a in env.args))

    # -- inference ----------------------------------------------------------

    def infer_eterm(self, env: Environment, e: Term) -> AnnotatedType:
        """Strongest annotated type of an E-term: the inferred refinement
        over v (fresh intermediate variables remain free), with one cost
        entry per recursive call at its inferred subproblem size."""
        inf = self._infer(env, e, _Fresh(env_fresh_base(env)))
        refinement = land(*inf.facts, eq(NU, inf.value))
        costs = tuple(RecCost(1, rc.size) for rc in inf.rec_calls)
        return AnnotatedType(ScalarType(inf.base, refinement),
                             RecurrenceAnnotation(costs, O1))

    def _signature_of(self, env: Environment, head: str) -> Optional[ArrowType]:
        bound = env.lookup(head)
        if bound is not None and isinstance(bound.type, ArrowType):
            return bound.type
        return None

    def _infer(self, env: Environment, e: Term, fresh: _Fresh) -> _EInf:
        match e:
            case Const(v):
                base = BOOL if isinstance(v, bool) else INT
                return _EInf(base, LBool(v) if isinstance(v, bool) else LInt(v))
            case Var(name):
                aty = env.lookup(name)
                if aty is None:
                    raise TypingError(f"unbound variable {name}")
                if isinstance(aty.type, ArrowType):
                    raise TypingError(f"{name} is a function, not a value")
                return _EInf(aty.type.base, LVar(name))
            case App(head, args):
                return self._infer_app(env, head, args, fresh)
        raise TypingError(f"not an E-term: {pretty.print_term(e)}")

    def _infer_app(self, env: Environment, head: str,
                   args: tuple[Term, ...], fresh: _Fresh) -> _EInf:
        out = _EInf(INT, TRUE)
        arg_infs = []
        for a in args:
            sub = self._infer(env, a, fresh)
            arg_infs.append(sub)
            offset = len(out.facts)
            out.facts.extend(sub.facts)
            out.fresh.extend(sub.fresh)
            for rc in sub.rec_calls:
                out.rec_calls.append(_RecCallInfo(rc.size, len(out.rec_calls),
                                                  rc.known + offset))
            for ac in sub.aux_calls:
                out.aux_calls.append(_AuxCallInfo(ac.name, ac.bound, ac.size,
                                                  ac.known + offset))
            out.arg_checks.extend(
                (o, w, k + offset) for o, w, k in sub.arg_checks)

        def materialize(sub: _EInf, base: BaseType) -> LogicalExpr:
            # Var/Const args are referenced directly; compound values get a
            # fresh name defined by the subterm's refinement.
            if isinstance(sub.value, (LVar, LInt, LBool)):
                return sub.value
            z = fresh.take()
            out.fresh.append((z, base))
            out.facts.append(eq(LVar(z), sub.value))
            return LVar(z)

        # primitives
        if head in PRIMITIVES:
            prim = PRIMITIVES[head]
            if len(args) != len(prim.arg_types):
                raise TypingError(f"{head} arity mismatch")
            vals = []
            for sub, want in zip(arg_infs, prim.arg_types):
                if sub.base != want:
                    raise TypingError(f"{head} argument must be {want}")
                vals.append(materialize(sub, want))
            mapping = {f"p{i + 1}": v for i, v in enumerate(vals)}
            refined = subst_logic_many(prim.refinement, mapping)
            zout = fresh.take()
            out.fresh.append((zout, prim.result_type))
            out.facts.append(subst_logic(refined, NU.name, LVar(zout)))
            out.base = prim.result_type
            out.value = LVar(zout)
            return out

        # constructors
        dt = self._ctor_owner.get(head)
        if dt is not None:
            ctor = dt.ctor(head)
            if len(args) != len(ctor.fields):
                raise TypingError(f"constructor {head} arity mismatch")
            vals = []
            for sub, want in zip(arg_infs, ctor.fields):
                if sub.base != want:
                    raise TypingError(f"{head} field must be {want}")
                vals.append(materialize(sub, want))
            zout = fresh.take()
            out.fresh.append((zout, DataType(dt.name)))
            int_vars = [LVar(n) for n, aty in env.bindings
                        if isinstance(aty.type, ScalarType)
                        and aty.type.base == INT and not is_fresh_name(n)]
            for m in self.problem.measures_of(dt.name):
                clause = m.clause_for(head)
                if clause is None:
                    continue
                field_map = dict(zip(clause.fields, vals))
                if not clause.params:
                    rhs = subst_logic_many(clause.rhs, field_map)
                    out.facts.append(eq(LFun(m.name, (LVar(zout),)), rhs))
                    continue
                # parameterized measures are instantiated at the in-scope
                # integer variables
                for combo in itertools.product(int_vars,
                                               repeat=len(clause.params)):
                    mapping = dict(field_map)
                    mapping.update(zip(clause.params, combo))
                    args: list[LogicalExpr] = []
                    others = iter(combo)
                    for i in range(m.arity):
                        if i == clause.subject_index:
                            args.append(LVar(zout))
                        else:
                            args.append(next(others))
                    out.facts.append(eq(LFun(m.name, tuple(args)),
                                        subst_logic_many(clause.rhs, mapping)))
            out.base = DataType(dt.name)
            out.value = LVar(zout)
            return out

        # auxiliary or recursive function application
        sig = self._signature_of(env, head)
        if sig is None:
            raise TypingError(f"unknown function {head}")
        if len(args) != len(sig.params):
            raise TypingError(f"{head} expects {len(sig.params)} arguments")
        vals = []
        mapping: dict[str, LogicalExpr] = {}
        known = len(out.facts)  # argument-level facts only
        for sub, (pname, pty) in zip(arg_infs, sig.params):
            if sub.base != pty.base:
                raise TypingError(f"{head}: argument {pname} must be {pty.base}")
            v = materialize(sub, pty.base)
            vals.append(v)
            if pty.refinement != TRUE:
                obligation = subst_logic_many(
                    subst_logic(pty.refinement, NU.name, v), mapping)
                out.arg_checks.append(
                    (obligation, f"argument {pname} of {head}", len(out.facts)))
            mapping[pname] = v
        known = len(out.facts)
        zout = fresh.take()
        out.fresh.append((zout, sig.result.base))
        result_fact = subst_logic_many(
            subst_logic(sig.result.refinement, NU.name, LVar(zout)), mapping)
        if result_fact != TRUE:
            out.facts.append(result_fact)
        out.base = sig.result.base
        out.value = LVar(zout)

        size_fn = env.size_fn(head) or self.problem.size_fn(head)
        size = size_fn.apply(tuple(vals)) if size_fn is not None else None
        if env.rec_fun == head:
            out.rec_calls.append(_RecCallInfo(size, len(out.rec_calls), known))
            if size is None:
                raise TypingError(f"recursive {head} has no size function")
        else:
            aux = self.problem.aux(head)
            bound = aux.bound if aux is not None else O1
            out.aux_calls.append(_AuxCallInfo(head, bound, size, known))
        return out

    # -- E-term checking ----------------------------------------------------

    def count_rec_calls(self, env: Environment, t: Term) -> int:
        match t:
            case App(head, args):
                own = 1 if head == env.rec_fun else 0
                return own + sum(self.count_rec_calls(env, a) for a in args)
            case _:
                return 0

    def check_eterm(self, env: Environment, t: Term, scalar: ScalarType,
                    ann: RecurrenceAnnotation) -> bool:
        """Staged acceptance of an E-term against an annotated scalar goal:
        recursive-call counting, per-call size queries over all cost-entry
        matchings, auxiliary bound side conditions, argument refinements,
        and finally refinement subtyping."""
        self.last_failure = None
        total_budget = ann.total_count()
        n_calls = self.count_rec_calls(env, t)
        if n_calls > total_budget:
            self.last_failure = Failure(
                "rec-count", f"{n_calls} recursive calls exceed budget "
                f"{total_budget}")
            return False

        try:
            inf = self._infer(env, t, _Fresh(env_fresh_base(env)))
        except TypingError as exc:
            self.last_failure = Failure("infer", str(exc))
            return False
        if inf.base != scalar.base:
            self.last_failure = Failure(
                "base-type", f"{inf.base} does not match {scalar.base}")
            return False

        extra_vars = inf.fresh
        facts = inf.facts

        for obligation, what, known in inf.arg_checks:
            if not self._valid(env, extra_vars, facts[:known], obligation):
                self.last_failure = Failure("arg-refinement", what)
                return False

        if inf.rec_calls and not self._assign_rec_calls(env, inf, ann):
            return False

        if not self._check_aux_bounds(env, inf, ann):
            return False

        goal = subst_logic(scalar.refinement, NU.name, inf.value)
        if not self._valid(env, extra_vars, facts, goal):
            self.last_failure = Failure(
                "subtype", f"refinement {pretty.print_logic(scalar.refinement)} "
                f"not established")
            return False
        return True

    def _assign_rec_calls(self, env: Environment, inf: _EInf,
                          ann: RecurrenceAnnotation) -> bool:
        """Match each recursive call to a cost entry; every matching is
        tried.  For the correlated tree pattern the first call bound to the
        free-variable entry fixes the correlation size."""
        current = self._current_size(env)
        entries = ann.costs
        calls = inf.rec_calls
        capacities = [rc.count for rc in entries]

        def try_assign(idx: int, caps: list[int],
                       corr: Optional[LogicalExpr]) -> bool:
            if idx == len(calls):
                return True
            call = calls[idx]
            for k, entry in enumerate(entries):
                if caps[k] == 0:
                    continue
                uses_corr = CORR_VAR in free_logic_vars(entry.size)
                binds_corr = entry.size == LVar(CORR_VAR)
                new_corr = corr
                if binds_corr and corr is None:
                    # first correlated call: the entry size is the call size
                    size_bound = None
                    new_corr = call.size
                elif uses_corr:
                    if corr is None and not binds_corr:
                        continue  # dependent entry before the binder
                    bound_expr = subst_logic(entry.size, CORR_VAR,
                                             corr if corr is not None
                                             else call.size)
                    size_bound = subst_logic(bound_expr, MU.name, current)
                else:
                    size_bound = subst_logic(entry.size, MU.name, current)
                checks = [LBin("<=", LInt(0), call.size),
                          LBin("<", call.size, current)]
                if size_bound is not None:
                    checks.append(LBin("<=", call.size, size_bound))
                if self._valid(env, inf.fresh, inf.facts[:call.known],
                               land(*checks)):
                    caps[k] -= 1
                    if try_assign(idx + 1, caps, new_corr):
                        return True
                    caps[k] += 1
            return False

        if try_assign(0, capacities, None):
            return True
        self.last_failure = Failure(
            "rec-size", "no cost-entry matching admits the recursive calls "
            f"(budget {pretty.print_annotation(ann)})")
        return False

    def _check_aux_bounds(self, env: Environment, inf: _EInf,
                          ann: RecurrenceAnnotation) -> bool:
        """Auxiliary calls may not exceed the body bound: constant-cost
        auxiliaries always pass; a non-constant auxiliary must be called on
        a subproblem no larger than the current one and its bound class
        must be contained in the body's."""
        for call in inf.aux_calls:
            if call.bound.is_constant():
                continue
            if not LogicChecker.check_big_o(call.bound, ann.bound):
                self.last_failure = Failure(
                    "aux-bound", f"{call.name} costs {call.bound}, body "
                    f"allows {ann.bound}")
                return False
            if call.size is None:
                self.last_failure = Failure(
                    "aux-bound", f"{call.name} has no size function")
                return False
            current = self._current_size(env)
            ok = self._valid(env, inf.fresh, inf.facts[:call.known],
                             LBin("<=", call.size, current))
            if not ok:
                self.last_failure = Failure(
                    "aux-bound", f"cannot bound the size of the call to "
                    f"{call.name}")
                return False
        return True

    # -- I-term checking ----------------------------------------------------

    def check_term(self, goal: TypingGoal, t: Term) -> bool:
        """Does a derivation exist for `t` at the goal?  Function terms try
        every pattern instantiation of the goal bound."""
        if isinstance(t, Fix):
            return self.check_fix(t) is not None
        if isinstance(goal.type.type, ScalarType):
            return self.check_iterm(goal.env, t, goal.type.type,
                                    goal.type.annotation)
        raise TypingError("non-function goals must carry scalar types")

    def check_fix(self, t: Fix) -> Optional[Pattern]:
        """Check a function term against the problem goal; returns the
        pattern that justified acceptance, if any."""
        p = self.problem
        if not isinstance(t, Fix):
            raise TypingError("top-level term must be a function")
        if len(t.params) != len(p.goal_type.params):
            self.last_failure = Failure("arity", "parameter count mismatch")
            return None
        from .lang import resolve_ctors
        ctors = frozenset(self._ctor_owner)
        body = _rename_params(t, p.goal_type.param_names, p.goal_name)
        body = resolve_ctors(body, ctors)
        env, result = self.goal_environment()
        self.pattern_failures = []
        for pattern in self.match_patterns(p.goal_bound):
            if self.check_iterm(env, body, result, pattern.annotation):
                return pattern
            self.pattern_failures.append((pattern.id, self.last_failure))
        return None

    def match_patterns(self, bound: BoundExpr) -> list[Pattern]:
        return match_patterns(bound, self.divide_ds, self.subtract_ds)

    def check_iterm(self, env: Environment, t: Term, scalar: ScalarType,
                    ann: RecurrenceAnnotation) -> bool:
        match t:
            case If(cond, then, els):
                ok = self.split_if(env, cond)
                if ok is None:
                    return False
                then_env, else_env = ok
                return (self.check_iterm(then_env, then, scalar, ann)
                        and self.check_iterm(else_env, els, scalar, ann))
            case Match(scrut, cases):
                skeleton = [(c.ctor, c.binders) for c in cases]
                branch_envs = self.match_environments(env, scrut, skeleton)
                if branch_envs is None:
                    return False
                return all(self.check_iterm(benv, case.body, scalar, ann)
                           for benv, case in zip(branch_envs, cases))
            case Fix(_, _, _) | Tick(_, _):
                self.last_failure = Failure(
                    "shape", "nested functions and tick are not checkable")
                return False
            case _:
                return self.check_eterm(env, t, scalar, ann)

    def split_if(self, env: Environment,
                 cond: Term) -> Optional[tuple[Environment, Environment]]:
        """Type the guard with the zero-count share of the annotation and
        propagate the guard's refinement as a path condition."""
        if self.count_rec_calls(env, cond) > 0:
            self.last_failure = Failure("guard", "guards may not recurse")
            return None
        fresh = _Fresh(env_fresh_base(env))
        try:
            inf = self._infer(env, cond, fresh)
        except TypingError as exc:
            self.last_failure = Failure("guard", str(exc))
            return None
        if inf.base != BOOL:
            self.last_failure = Failure("guard", "condition must be Bool")
            return None
        for obligation, what, known in inf.arg_checks:
            if not self._valid(env, inf.fresh, inf.facts[:known], obligation):
                self.last_failure = Failure("guard", what)
                return None
        base = env
        for name, sort in inf.fresh:
            base = base.bind(name, AnnotatedType.plain(ScalarType(sort)))
        for f in inf.facts:
            base = base.assume(f)
        then_env = base.assume(eq(inf.value, LBool(True)))
        else_env = base.assume(eq(inf.value, LBool(False)))
        return then_env, else_env

    def match_environments(self, env: Environment, scrut: Term,
                           skeleton: list[tuple[str, tuple[str, ...]]]
                           ) -> Optional[list[Environment]]:
        """Per-case environments for a match: constructor field bindings
        plus the measure-clause instances for the matched constructor.
        The scrutinee types with the zero-count share, so it may not make
        recursive calls."""
        if self.count_rec_calls(env, scrut) > 0:
            self.last_failure = Failure("scrutinee", "scrutinees may not recurse")
            return None
        fresh = _Fresh(env_fresh_base(env))
        try:
            inf = self._infer(env, scrut, fresh)
        except TypingError as exc:
            self.last_failure = Failure("scrutinee", str(exc))
            return None
        if not isinstance(inf.base, DataType):
            self.last_failure = Failure("scrutinee", "match needs a datatype")
            return None
        for obligation, what, known in inf.arg_checks:
            if not self._valid(env, inf.fresh, inf.facts[:known], obligation):
                self.last_failure = Failure("scrutinee", what)
                return None
        dt = self.problem.datatype(inf.base.name)
        have = {ctor for ctor, _ in skeleton}
        want = {c.name for c in dt.ctors}
        if have != want or len(skeleton) != len(dt.ctors):
            self.last_failure = Failure(
                "match", f"cases {sorted(have)} do not cover {sorted(want)}")
            return None

        base = env
        for name, sort in inf.fresh:
            base = base.bind(name, AnnotatedType.plain(ScalarType(sort)))
        for f in inf.facts:
            base = base.assume(f)
        subject = inf.value

        out = []
        for cname, binders in skeleton:
            ctor = dt.ctor(cname)
            if len(binders) != len(ctor.fields):
                self.last_failure = Failure(
                    "match", f"{cname} binds {len(binders)} of "
                    f"{len(ctor.fields)} fields")
                return None
            benv = base
            for b, fty in zip(binders, ctor.fields):
                if benv.lookup(b) is not None:
                    self.last_failure = Failure(
                        "match", f"binder {b} shadows an existing binding")
                    return None
                benv = benv.bind(b, AnnotatedType.plain(ScalarType(fty)))
            benv = self._assume_measure_instances(benv, dt, cname, binders,
                                                  subject)
            out.append(benv)
        return out

    def _assume_measure_instances(self, env: Environment, dt, cname: str,
                                  binders: tuple[str, ...],
                                  subject: LogicalExpr) -> Environment:
        int_vars = [LVar(n) for n, aty in env.bindings
                    if isinstance(aty.type, ScalarType)
                    and aty.type.base == INT and not is_fresh_name(n)]
        for m in self.problem.measures_of(dt.name):
            clause = m.clause_for(cname)
            if clause is None:
                continue
            field_map = dict(zip(clause.fields, (LVar(b) for b in binders)))
            if not clause.params:
                lhs = LFun(m.name, (subject,))
                env = env.assume(eq(lhs, subst_logic_many(clause.rhs, field_map)))
                continue
            # instantiate non-structural parameters over in-scope integers
            for combo in itertools.product(int_vars, repeat=len(clause.params)):
                mapping = dict(field_map)
                mapping.update(dict(zip(clause.params, combo)))
                args: list[LogicalExpr] = []
                others = iter(combo)
                for i in range(m.arity):
                    if i == clause.subject_index:
                        args.append(subject)
                    else:
                        args.append(next(others))
                env = env.assume(eq(LFun(m.name, tuple(args)),
                                    subst_logic_many(clause.rhs, mapping)))
        return env

    # -- subtyping -----------------------------------------------------------

    def subtype(self, env: Environment, g1: AnnotatedType,
                g2: AnnotatedType) -> bool:
        """Derivability of g1 <: g2: refinement implication for the type
        part, entrywise count/size dominance (with split/combine of
        equal-size entries) for the costs, and bound-class containment."""
        if not self._type_subtype(env, g1.type, g2.type):
            return False
        return self._ann_subtype(env, g1.annotation, g2.annotation)

    def _type_subtype(self, env: Environment, t1: RefinementType,
                      t2: RefinementType) -> bool:
        if isinstance(t1, ScalarType) and isinstance(t2, ScalarType):
            if t1.base != t2.base:
                return False
            if t2.refinement == TRUE:
                return True
            return self._valid(env, [(NU.name, t1.base)], [t1.refinement],
                               t2.refinement)
        if isinstance(t1, ArrowType) and isinstance(t2, ArrowType):
            if len(t1.params) != len(t2.params):
                return False
            scope = env
            for (n1, p1), (n2, p2) in zip(t1.params, t2.params):
                if not self._type_subtype(scope, p2, p1):  # contravariant
                    return False
                scope = scope.bind(n2, AnnotatedType.plain(p2))
            r1 = t1.result
            for (n1, _), (n2, _) in zip(t1.params, t2.params):
                if n1 != n2:
                    r1 = ScalarType(r1.base,
                                    subst_logic(r1.refinement, n1, LVar(n2)))
            return self._type_subtype(scope, r1, t2.result)
        return False

    def size_dominated(self, env: Environment, s1: LogicalExpr,
                       s2: LogicalExpr) -> bool:
        """s1(u) <= s2(u) for all nonnegative u (and nonnegative correlation
        variable, when present)."""
        hyp = [LBin(">=", MU, LInt(0))]
        vars_ = [(MU.name, INT)]
        if CORR_VAR in (free_logic_vars(s1) | free_logic_vars(s2)):
            vars_.append((CORR_VAR, INT))
            hyp.append(LBin(">=", LVar(CORR_VAR), LInt(0)))
        return self._valid(env, vars_, hyp, LBin("<=", s1, s2))

    def _ann_subtype(self, env: Environment, a1: RecurrenceAnnotation,
                     a2: RecurrenceAnnotation) -> bool:
        if not LogicChecker.check_big_o(a1.bound, a2.bound):
            return False
        demands = [rc for rc in a1.costs if rc.count > 0]
        caps = [rc.count for rc in a2.costs]

        def place(i: int, remaining: list[int]) -> bool:
            if i == len(units):
                return True
            size = units[i]
            for k, entry in enumerate(a2.costs):
                if remaining[k] <= 0:
                    continue
                if self.size_dominated(env, size, entry.size):
                    remaining[k] -= 1
                    if place(i + 1, remaining):
                        return True
                    remaining[k] += 1
            return False

        units = [rc.size for rc in demands for _ in range(rc.count)]
        return place(0, list(caps))


def env_fresh_base(env: Environment) -> int:
    return sum(1 for n, _ in env.bindings if is_fresh_name(n))


def _rename_params(t: Fix, target: tuple[str, ...], name: str) -> Term:
    """Alpha-rename a function's parameters and self-references to the
    goal's names before checking the body."""
    body = t.body
    olds = (t.name, *t.params)
    news = (name, *target)
    temp = [f"tmp{FRESH_MARK}{i}" for i in range(len(olds))]
    for old, tmp in zip(olds, temp):
        body = substitute(body, old, Var(tmp))
    for tmp, new in zip(temp, news):
        body = substitute(body, tmp, Var(new))
    return body
