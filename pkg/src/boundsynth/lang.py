"""Core data model: surface terms, logical expressions, refinement types,
recurrence annotations, and the substitution machinery shared by every
other module.

All nodes are immutable (frozen dataclasses) and hashable, so they can be
used as dictionary keys, shared between threads, and compared structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Union

# Reserved logical symbols: "v" names the refined value, "u" the top-level
# problem size.  Neither may be bound by user programs or declarations.
VALUE_VAR = "v"
SIZE_VAR = "u"
# Free correlation variable used by the tree-shaped recurrence pattern.
# The "!" makes it unparseable as a user identifier.
CORR_VAR = "l!"

RESERVED_NAMES = frozenset({VALUE_VAR, SIZE_VAR})


class LangError(Exception):
    """Malformed term/type/expression construction or use."""


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    value: Union[int, bool]

    def __post_init__(self):
        if not isinstance(self.value, (int, bool)):
            raise LangError(f"constant must be int or bool, got {self.value!r}")


@dataclass(frozen=True)
class App(Term):
    """First-order application: the head is always a name."""

    head: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    els: Term


@dataclass(frozen=True)
class MatchCase:
    ctor: str
    binders: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class Match(Term):
    scrutinee: Term
    cases: tuple[MatchCase, ...]


@dataclass(frozen=True)
class Fix(Term):
    name: str
    params: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class Tick(Term):
    """tick(c, t): consume c resource units, then evaluate t.

    Only legal inside auxiliary-function implementations; the checker and
    synthesizer reject it.
    """

    cost: int
    body: Term

    def __post_init__(self):
        if self.cost < 0:
            raise LangError("tick cost must be nonnegative")


def is_eterm(t: Term) -> bool:
    """E-terms are variables, constants, and applications of E-terms."""
    if isinstance(t, (Var, Const)):
        return True
    if isinstance(t, App):
        return all(is_eterm(a) for a in t.args)
    return False


def term_size(t: Term) -> int:
    match t:
        case Var(_) | Const(_):
            return 1
        case App(_, args):
            return 1 + sum(term_size(a) for a in args)
        case If(c, a, b):
            return 1 + term_size(c) + term_size(a) + term_size(b)
        case Match(s, cases):
            return 1 + term_size(s) + sum(term_size(c.body) for c in cases)
        case Fix(_, _, body):
            return 1 + term_size(body)
        case Tick(_, body):
            return 1 + term_size(body)
    raise LangError(f"not a term: {t!r}")


def term_depth(t: Term) -> int:
    """Application-nesting depth used by the enumerator's depth bound."""
    match t:
        case Var(_) | Const(_):
            return 1
        case App(_, args):
            return 1 + max((term_depth(a) for a in args), default=0)
        case If(c, a, b):
            return max(term_depth(c), term_depth(a), term_depth(b))
        case Match(s, cases):
            return max(term_depth(s), max(term_depth(c.body) for c in cases))
        case Fix(_, _, body):
            return term_depth(body)
        case Tick(_, body):
            return term_depth(body)
    raise LangError(f"not a term: {t!r}")


def free_term_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset({name})
        case Const(_):
            return frozenset()
        case App(head, args):
            out = frozenset({head})
            for a in args:
                out |= free_term_vars(a)
            return out
        case If(c, a, b):
            return free_term_vars(c) | free_term_vars(a) | free_term_vars(b)
        case Match(s, cases):
            out = free_term_vars(s)
            for c in cases:
                out |= free_term_vars(c.body) - frozenset(c.binders)
            return out
        case Fix(name, params, body):
            return free_term_vars(body) - frozenset(params) - frozenset({name})
        case Tick(_, body):
            return free_term_vars(body)
    raise LangError(f"not a term: {t!r}")


def resolve_ctors(t: Term, ctors: frozenset[str]) -> Term:
    """Normalize nullary constructor references: the parser cannot tell a
    variable from a constant constructor, so `Nil` arrives as Var and is
    rewritten to an empty application here."""
    match t:
        case Var(name):
            return App(name, ()) if name in ctors else t
        case Const(_):
            return t
        case App(head, args):
            return App(head, tuple(resolve_ctors(a, ctors) for a in args))
        case If(c, a, b):
            return If(resolve_ctors(c, ctors), resolve_ctors(a, ctors),
                      resolve_ctors(b, ctors))
        case Match(s_, cases):
            return Match(resolve_ctors(s_, ctors),
                         tuple(MatchCase(c.ctor, c.binders,
                                         resolve_ctors(c.body, ctors))
                               for c in cases))
        case Fix(name, params, body):
            return Fix(name, params, resolve_ctors(body, ctors))
        case Tick(cost, body):
            return Tick(cost, resolve_ctors(body, ctors))
    raise LangError(f"not a term: {t!r}")


def fresh_name(base: str, avoid: set[str]) -> str:
    cand = base
    while cand in avoid or cand in RESERVED_NAMES:
        cand += "'"
    return cand


def substitute(t: Term, x: str, s: Term) -> Term:
    """Capture-avoiding substitution [s/x]t.

    Binders shadow as usual; binders that would capture a free variable of
    `s` are renamed first.  App heads are names, so substituting a Var for
    a head replaces the head; substituting a non-Var for a head that is
    applied is rejected (first-order language).
    """
    sub = lambda u: substitute(u, x, s)
    match t:
        case Var(name):
            return s if name == x else t
        case Const(_):
            return t
        case App(head, args):
            new_args = tuple(sub(a) for a in args)
            if head == x:
                if isinstance(s, Var):
                    return App(s.name, new_args)
                if isinstance(s, Fix) or isinstance(s, App) and not new_args:
                    # A fix-term replacing an applied head stays at the head
                    # position via a synthetic redex; the evaluator resolves
                    # function names through its definition map instead, so
                    # this only happens in tests.
                    raise LangError("cannot substitute a non-name for an applied head")
                raise LangError("cannot substitute a non-name for an applied head")
            return App(head, new_args)
        case If(c, a, b):
            return If(sub(c), sub(a), sub(b))
        case Match(scrut, cases):
            new_cases = []
            for case in cases:
                if x in case.binders:
                    new_cases.append(case)
                    continue
                binders = case.binders
                body = case.body
                clash = free_term_vars(s) & set(binders)
                if clash:
                    avoid = set(free_term_vars(body)) | free_term_vars(s) | set(binders)
                    renamed = []
                    for b in binders:
                        if b in clash:
                            nb = fresh_name(b, avoid)
                            avoid.add(nb)
                            body = substitute(body, b, Var(nb))
                            renamed.append(nb)
                        else:
                            renamed.append(b)
                    binders = tuple(renamed)
                new_cases.append(MatchCase(case.ctor, binders, sub(body)))
            return Match(sub(scrut), tuple(new_cases))
        case Fix(name, params, body):
            if x == name or x in params:
                return t
            bound = {name, *params}
            clash = free_term_vars(s) & bound
            if clash:
                avoid = set(free_term_vars(body)) | free_term_vars(s) | bound
                if name in clash:
                    nn = fresh_name(name, avoid)
                    avoid.add(nn)
                    body = substitute(body, name, Var(nn))
                    name = nn
                new_params = []
                for p in params:
                    if p in clash:
                        np = fresh_name(p, avoid)
                        avoid.add(np)
                        body = substitute(body, p, Var(np))
                        new_params.append(np)
                    else:
                        new_params.append(p)
                params = tuple(new_params)
            return Fix(name, params, substitute(body, x, s))
        case Tick(cost, body):
            return Tick(cost, sub(body))
    raise LangError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Logical expressions
# ---------------------------------------------------------------------------

class LogicalExpr:
    __slots__ = ()


@dataclass(frozen=True)
class LVar(LogicalExpr):
    name: str


@dataclass(frozen=True)
class LInt(LogicalExpr):
    value: int


@dataclass(frozen=True)
class LBool(LogicalExpr):
    value: bool


@dataclass(frozen=True)
class LFun(LogicalExpr):
    """Application of a measure, size function, or constructor symbol."""

    name: str
    args: tuple[LogicalExpr, ...]


# Binary operators.  "div" is floor division, "cdiv" is ceiling division;
# both are exact over all integers for positive divisors.
ARITH_OPS = ("+", "-", "*", "div", "cdiv", "mod")
CMP_OPS = ("==", "!=", "<=", "<", ">=", ">")
BOOL_OPS = ("and", "or", "==>")
LOGIC_BIN_OPS = ARITH_OPS + CMP_OPS + BOOL_OPS


@dataclass(frozen=True)
class LBin(LogicalExpr):
    op: str
    lhs: LogicalExpr
    rhs: LogicalExpr

    def __post_init__(self):
        if self.op not in LOGIC_BIN_OPS:
            raise LangError(f"unknown logical operator {self.op!r}")


@dataclass(frozen=True)
class LNot(LogicalExpr):
    arg: LogicalExpr


@dataclass(frozen=True)
class LIte(LogicalExpr):
    cond: LogicalExpr
    then: LogicalExpr
    els: LogicalExpr


TRUE = LBool(True)
FALSE = LBool(False)
NU = LVar(VALUE_VAR)
MU = LVar(SIZE_VAR)


def lint(n: int) -> LInt:
    return LInt(n)


def land(*parts: LogicalExpr) -> LogicalExpr:
    parts = tuple(p for p in parts if p != TRUE)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = LBin("and", out, p)
    return out


def lor(a: LogicalExpr, b: LogicalExpr) -> LogicalExpr:
    return LBin("or", a, b)


def eq(a: LogicalExpr, b: LogicalExpr) -> LogicalExpr:
    return LBin("==", a, b)


def implies(a: LogicalExpr, b: LogicalExpr) -> LogicalExpr:
    return LBin("==>", a, b)


def free_logic_vars(e: LogicalExpr) -> frozenset[str]:
    match e:
        case LVar(name):
            return frozenset({name})
        case LInt(_) | LBool(_):
            return frozenset()
        case LFun(_, args):
            out = frozenset()
            for a in args:
                out |= free_logic_vars(a)
            return out
        case LBin(_, lhs, rhs):
            return free_logic_vars(lhs) | free_logic_vars(rhs)
        case LNot(arg):
            return free_logic_vars(arg)
        case LIte(c, t, f):
            return free_logic_vars(c) | free_logic_vars(t) | free_logic_vars(f)
    raise LangError(f"not a logical expression: {e!r}")


def subst_logic(e: LogicalExpr, x: str, repl: LogicalExpr) -> LogicalExpr:
    """[repl/x]e.  Logical expressions have no binders, so this is plain
    structural replacement."""
    match e:
        case LVar(name):
            return repl if name == x else e
        case LInt(_) | LBool(_):
            return e
        case LFun(name, args):
            return LFun(name, tuple(subst_logic(a, x, repl) for a in args))
        case LBin(op, lhs, rhs):
            return LBin(op, subst_logic(lhs, x, repl), subst_logic(rhs, x, repl))
        case LNot(arg):
            return LNot(subst_logic(arg, x, repl))
        case LIte(c, t, f):
            return LIte(subst_logic(c, x, repl), subst_logic(t, x, repl),
                        subst_logic(f, x, repl))
    raise LangError(f"not a logical expression: {e!r}")


def subst_logic_many(e: LogicalExpr, mapping: dict[str, LogicalExpr]) -> LogicalExpr:
    """Simultaneous substitution (mapping keys are pairwise distinct)."""
    match e:
        case LVar(name):
            return mapping.get(name, e)
        case LInt(_) | LBool(_):
            return e
        case LFun(name, args):
            return LFun(name, tuple(subst_logic_many(a, mapping) for a in args))
        case LBin(op, lhs, rhs):
            return LBin(op, subst_logic_many(lhs, mapping), subst_logic_many(rhs, mapping))
        case LNot(arg):
            return LNot(subst_logic_many(arg, mapping))
        case LIte(c, t, f):
            return LIte(subst_logic_many(c, mapping), subst_logic_many(t, mapping),
                        subst_logic_many(f, mapping))
    raise LangError(f"not a logical expression: {e!r}")


def eval_logic(e: LogicalExpr, env: dict[str, object],
               funs: Optional[Callable[[str, tuple], object]] = None):
    """Evaluate a logical expression under a variable assignment.

    Division and mod require positive divisors; `div` floors toward
    negative infinity (Python semantics), which matches the checked
    fragment.  `funs` interprets measure/constructor applications.
    """
    match e:
        case LVar(name):
            if name not in env:
                raise LangError(f"unbound logical variable {name}")
            return env[name]
        case LInt(value):
            return value
        case LBool(value):
            return value
        case LFun(name, args):
            if funs is None:
                raise LangError(f"no interpretation for function {name}")
            return funs(name, tuple(eval_logic(a, env, funs) for a in args))
        case LNot(arg):
            return not eval_logic(arg, env, funs)
        case LIte(c, t, f):
            return eval_logic(t, env, funs) if eval_logic(c, env, funs) \
                else eval_logic(f, env, funs)
        case LBin(op, lhs, rhs):
            if op == "and":
                return bool(eval_logic(lhs, env, funs)) and bool(eval_logic(rhs, env, funs))
            if op == "or":
                return bool(eval_logic(lhs, env, funs)) or bool(eval_logic(rhs, env, funs))
            if op == "==>":
                return (not eval_logic(lhs, env, funs)) or bool(eval_logic(rhs, env, funs))
            a = eval_logic(lhs, env, funs)
            b = eval_logic(rhs, env, funs)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "div":
                if b <= 0:
                    raise LangError("division by nonpositive divisor")
                return a // b
            if op == "cdiv":
                if b <= 0:
                    raise LangError("division by nonpositive divisor")
                return -((-a) // b)
            if op == "mod":
                if b <= 0:
                    raise LangError("mod by nonpositive divisor")
                return a % b
            if op == "==":
                return a == b
            if op == "!=":
                return a != b
            if op == "<=":
                return a <= b
            if op == "<":
                return a < b
            if op == ">=":
                return a >= b
            if op == ">":
                return a > b
    raise LangError(f"not a logical expression: {e!r}")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class BaseType:
    __slots__ = ()


@dataclass(frozen=True)
class IntType(BaseType):
    def __str__(self):
        return "Int"


@dataclass(frozen=True)
class BoolType(BaseType):
    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class DataType(BaseType):
    name: str

    def __str__(self):
        return self.name


INT = IntType()
BOOL = BoolType()


@dataclass(frozen=True)
class CtorDecl:
    name: str
    fields: tuple[BaseType, ...]


@dataclass(frozen=True)
class DataDecl:
    """Algebraic datatype with its single intrinsic integer measure."""

    name: str
    ctors: tuple[CtorDecl, ...]
    intrinsic_measure: str

    def ctor(self, name: str) -> CtorDecl:
        for c in self.ctors:
            if c.name == name:
                return c
        raise LangError(f"{self.name} has no constructor {name}")


class RefinementType:
    __slots__ = ()


@dataclass(frozen=True)
class ScalarType(RefinementType):
    base: BaseType
    refinement: LogicalExpr = TRUE


@dataclass(frozen=True)
class ArrowType(RefinementType):
    params: tuple[tuple[str, ScalarType], ...]
    result: ScalarType

    def __post_init__(self):
        if not self.params:
            raise LangError("arrow type needs at least one parameter")

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.params)


# ---------------------------------------------------------------------------
# Recurrence annotations and bound expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundExpr:
    """Canonical complexity class u^a * log^b(u) + c.

    When a == b == 0 the class is the constants O(1) and c is normalized
    to 1, so structural equality coincides with class equality there.
    """

    a: Fraction = Fraction(0)
    b: int = 0
    c: int = 0

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.c < 0:
            raise LangError("bound exponents and constant must be nonnegative")
        if not isinstance(self.a, Fraction):
            object.__setattr__(self, "a", Fraction(self.a))
        if self.a == 0 and self.b == 0:
            object.__setattr__(self, "c", 1)

    def is_constant(self) -> bool:
        return self.a == 0 and self.b == 0

    def evaluate(self, size: float, *, floor_one: bool = True) -> float:
        """Numeric value at a given size, with logs base 2 and an optional
        floor at 1 so ratios are never divided by zero."""
        import math
        n = max(float(size), 1.0)
        val = (n ** float(self.a)) * (math.log2(n) ** self.b if self.b else 1.0)
        if self.a == 0 and self.b == 0:
            val = 1.0
        val += self.c if not self.is_constant() else 0.0
        return max(val, 1.0) if floor_one else val

    def __str__(self):
        if self.is_constant():
            return "O(1)"
        parts = []
        if self.a == 1:
            parts.append("u")
        elif self.a != 0:
            parts.append(f"u^{self.a}")
        if self.b == 1:
            parts.append("log u")
        elif self.b > 1:
            parts.append(f"log^{self.b} u")
        body = " ".join(parts)
        if self.c:
            body += f" + {self.c}"
        return f"O({body})"


O1 = BoundExpr()
O_LOG = BoundExpr(Fraction(0), 1, 0)
O_N = BoundExpr(Fraction(1), 0, 0)
O_NLOG = BoundExpr(Fraction(1), 1, 0)
O_N2 = BoundExpr(Fraction(2), 0, 0)


@dataclass(frozen=True)
class RecCost:
    """Recursive-call cost [c, phi]: permission for up to `count` recursive
    calls at sizes dominated by `size` (a logical expression over u, and for
    the correlated tree pattern also over the free correlation variable)."""

    count: int
    size: LogicalExpr

    def __post_init__(self):
        if self.count < 0:
            raise LangError("recursive-call count must be nonnegative")


@dataclass(frozen=True)
class RecurrenceAnnotation:
    costs: tuple[RecCost, ...]
    bound: BoundExpr

    def total_count(self) -> int:
        return sum(rc.count for rc in self.costs)

    def is_correlated(self) -> bool:
        return any(CORR_VAR in free_logic_vars(rc.size) for rc in self.costs)

    def with_counts(self, counts: tuple[int, ...]) -> "RecurrenceAnnotation":
        if len(counts) != len(self.costs):
            raise LangError("count vector length mismatch")
        return RecurrenceAnnotation(
            tuple(RecCost(n, rc.size) for n, rc in zip(counts, self.costs)),
            self.bound)


@dataclass(frozen=True)
class AnnotatedType:
    """A refinement type paired with a recurrence annotation."""

    type: RefinementType
    annotation: RecurrenceAnnotation

    @staticmethod
    def plain(ty: RefinementType) -> "AnnotatedType":
        return AnnotatedType(ty, RecurrenceAnnotation((), O1))


# ---------------------------------------------------------------------------
# Size functions, measures, environments, problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SizeFunction:
    """User-defined logical map from a function's argument tuple to a
    nonnegative integer problem size."""

    params: tuple[str, ...]
    body: LogicalExpr

    def apply(self, args: tuple[LogicalExpr, ...]) -> LogicalExpr:
        if len(args) != len(self.params):
            raise LangError("size function arity mismatch")
        return subst_logic_many(self.body, dict(zip(self.params, args)))


@dataclass(frozen=True)
class MeasureClause:
    """One defining equation m(.., C(fields), ..) = rhs.

    `params` are the non-structural arguments; `subject_index` says which
    argument position carries the constructor pattern."""

    ctor: str
    params: tuple[str, ...]
    subject_index: int
    fields: tuple[str, ...]
    rhs: LogicalExpr


@dataclass(frozen=True)
class MeasureDef:
    name: str
    arg_sorts: tuple[BaseType, ...]
    result_sort: BaseType
    clauses: tuple[MeasureClause, ...] = ()
    intrinsic: bool = False

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def subject_sort(self) -> Optional[DataType]:
        for s in self.arg_sorts:
            if isinstance(s, DataType):
                return s
        return None

    def clause_for(self, ctor: str) -> Optional[MeasureClause]:
        for cl in self.clauses:
            if cl.ctor == ctor:
                return cl
        return None


@dataclass(frozen=True)
class Environment:
    """Typing context: ordered bindings, path conditions, the recursion
    point (recFun/args), and size functions in scope."""

    bindings: tuple[tuple[str, AnnotatedType], ...] = ()
    path_conditions: tuple[LogicalExpr, ...] = ()
    rec_fun: Optional[str] = None
    args: Optional[tuple[str, ...]] = None
    size_fns: tuple[tuple[str, SizeFunction], ...] = ()

    def bind(self, name: str, ty: AnnotatedType) -> "Environment":
        return Environment(self.bindings + ((name, ty),), self.path_conditions,
                           self.rec_fun, self.args, self.size_fns)

    def assume(self, cond: LogicalExpr) -> "Environment":
        if cond == TRUE:
            return self
        return Environment(self.bindings, self.path_conditions + (cond,),
                           self.rec_fun, self.args, self.size_fns)

    def with_recursion(self, fun: str, args: tuple[str, ...]) -> "Environment":
        if self.rec_fun is not None:
            raise LangError("recFun/args already set for this descent")
        return Environment(self.bindings, self.path_conditions, fun, args,
                           self.size_fns)

    def lookup(self, name: str) -> Optional[AnnotatedType]:
        for n, ty in reversed(self.bindings):
            if n == name:
                return ty
        return None

    def size_fn(self, name: str) -> Optional[SizeFunction]:
        for n, fn in self.size_fns:
            if n == name:
                return fn
        return None

    def names(self) -> set[str]:
        return {n for n, _ in self.bindings}


@dataclass(frozen=True)
class AuxDecl:
    """Auxiliary function: arrow signature, body cost bound, and an optional
    reference implementation used by the interpreter harness."""

    name: str
    type: ArrowType
    bound: BoundExpr
    impl: Optional[Term] = None


@dataclass(frozen=True)
class SynthesisProblem:
    goal_name: str
    goal_type: ArrowType
    goal_bound: BoundExpr
    auxiliaries: tuple[AuxDecl, ...] = ()
    datatypes: tuple[DataDecl, ...] = ()
    measures: tuple[MeasureDef, ...] = ()
    size_fns: tuple[tuple[str, SizeFunction], ...] = ()
    axioms: tuple[LogicalExpr, ...] = ()
    options: tuple[tuple[str, int], ...] = ()

    def datatype(self, name: str) -> DataDecl:
        for d in self.datatypes:
            if d.name == name:
                return d
        raise LangError(f"unknown datatype {name}")

    def ctor_owner(self, ctor: str) -> Optional[DataDecl]:
        for d in self.datatypes:
            for c in d.ctors:
                if c.name == ctor:
                    return d
        return None

    def measures_of(self, dt: str) -> tuple[MeasureDef, ...]:
        return tuple(m for m in self.measures
                     if isinstance(m.subject_sort(), DataType)
                     and m.subject_sort().name == dt)

    def measure(self, name: str) -> Optional[MeasureDef]:
        for m in self.measures:
            if m.name == name:
                return m
        return None

    def aux(self, name: str) -> Optional[AuxDecl]:
        for a in self.auxiliaries:
            if a.name == name:
                return a
        return None

    def size_fn(self, name: str) -> Optional[SizeFunction]:
        for n, fn in self.size_fns:
            if n == name:
                return fn
        return None

    def option(self, name: str, default: int) -> int:
        for k, value in self.options:
            if k == name:
                return value
        return default

    def goal_annotated(self) -> AnnotatedType:
        return AnnotatedType(self.goal_type, RecurrenceAnnotation((), self.goal_bound))


# ---------------------------------------------------------------------------
# Built-in primitive operators (zero-cost, never enumerated as such except
# for the comparison guards)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimOp:
    name: str
    arg_types: tuple[BaseType, ...]
    result_type: BaseType
    # Refinement of the result over v and the formal names p1..pn.
    refinement: LogicalExpr


def _prim(name, args, res, mk):
    formals = tuple(LVar(f"p{i + 1}") for i in range(len(args)))
    return PrimOp(name, args, res, mk(*formals))


PRIMITIVES: dict[str, PrimOp] = {
    p.name: p
    for p in [
        _prim("+", (INT, INT), INT, lambda a, b: eq(NU, LBin("+", a, b))),
        _prim("-", (INT, INT), INT, lambda a, b: eq(NU, LBin("-", a, b))),
        _prim("*", (INT, INT), INT, lambda a, b: eq(NU, LBin("*", a, b))),
        _prim("/", (INT, INT), INT, lambda a, b: eq(NU, LBin("div", a, b))),
        _prim("mod", (INT, INT), INT, lambda a, b: eq(NU, LBin("mod", a, b))),
        _prim("==", (INT, INT), BOOL, lambda a, b: eq(NU, LBin("==", a, b))),
        _prim("!=", (INT, INT), BOOL, lambda a, b: eq(NU, LBin("!=", a, b))),
        _prim("<=", (INT, INT), BOOL, lambda a, b: eq(NU, LBin("<=", a, b))),
        _prim("<", (INT, INT), BOOL, lambda a, b: eq(NU, LBin("<", a, b))),
        _prim(">=", (INT, INT), BOOL, lambda a, b: eq(NU, LBin(">=", a, b))),
        _prim(">", (INT, INT), BOOL, lambda a, b: eq(NU, LBin(">", a, b))),
        _prim("and", (BOOL, BOOL), BOOL, lambda a, b: eq(NU, LBin("and", a, b))),
        _prim("or", (BOOL, BOOL), BOOL, lambda a, b: eq(NU, LBin("or", a, b))),
        _prim("not", (BOOL,), BOOL, lambda a: eq(NU, LNot(a))),
    ]
}

# Comparison operators offered to the guard enumerator, in a fixed order.
GUARD_PRIMITIVES = ("==", "<=", "<")
