"""Parser for the problem-file format and the term language.

Problem files are a sequence of declarations::

    data List = Nil | Cons Int List
    intrinsic measure len : List -> Int
      | len(Nil) = 0
      | len(Cons(x, xs)) = 1 + len(xs)
    measure mem : Int -> List -> Bool
      | mem(k, Nil) = false
      | mem(k, Cons(h, t)) = k == h or mem(k, t)
    axiom x <= 1 ==> ilog(x) == 0
    aux dec :: x:Int -> {Int | v == x - 1}, O(1) = \\x. x - 1
    size prod = \\x. \\y. x
    goal prod :: x:{Int | v >= 0} -> y:{Int | v >= 0} -> {Int | v == x * y}, O(log u)
    option depth 5

Comments run from ``--`` to end of line.  The identifiers ``v`` (refined
value) and ``u`` (problem size) are reserved and rejected as binders.
Declaration keywords cannot be used as identifiers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .lang import (App, ArrowType, AuxDecl, BaseType, BOOL, BoundExpr, Const,
                   CtorDecl, DataDecl, FALSE, Fix, If, INT, LBin, LBool, LFun,
                   LInt, LIte, LNot, LVar, LogicalExpr, Match, MatchCase,
                   MeasureClause, MeasureDef, DataType, PRIMITIVES,
                   RESERVED_NAMES, ScalarType, SizeFunction, SynthesisProblem,
                   Term, Tick, TRUE, Var, free_logic_vars, free_term_vars,
                   resolve_ctors)

KEYWORDS = frozenset({
    "if", "then", "else", "match", "with", "fix", "tick", "true", "false",
    "and", "or", "not", "ite", "mod", "ceil", "floor",
    "data", "measure", "axiom", "aux", "size", "goal", "option", "intrinsic",
})
DECL_KEYWORDS = frozenset({"data", "measure", "axiom", "aux", "size", "goal",
                           "option", "intrinsic"})


class ProblemError(Exception):
    """Base class for problem-file diagnostics, with source position."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class ParseError(ProblemError):
    pass


class UnboundIdentifier(ProblemError):
    pass


class DuplicateDefinition(ProblemError):
    pass


class ReservedSymbol(ProblemError):
    pass


@dataclass
class Token:
    kind: str  # "ident" | "int" | "sym"
    text: str
    line: int
    col: int


_SYMBOLS = ["==>", "::", "->", "==", "!=", "<=", ">=", "<", ">", "+", "-",
            "*", "/", "\\", ".", ",", ":", "(", ")", "{", "}", "|", "=", "^"]
_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_']*")
_INT_RE = re.compile(r"[0-9]+")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        m = _INT_RE.match(text, i)
        if m:
            tokens.append(Token("int", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Optional[Token]:
        idx = self.pos + ahead
        return self.tokens[idx] if idx < len(self.tokens) else None

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def at_kind(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("sym", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col)
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}",
                             tok.line, tok.col)
        return tok

    def expect_ident(self, *, binder: bool = False) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}",
                             tok.line, tok.col)
        if tok.text in KEYWORDS:
            raise ParseError(f"keyword {tok.text!r} cannot be an identifier",
                             tok.line, tok.col)
        if binder and tok.text in RESERVED_NAMES:
            raise ReservedSymbol(
                f"{tok.text!r} is reserved and cannot be bound",
                tok.line, tok.col)
        return tok

    def done(self) -> bool:
        return self.pos >= len(self.tokens)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

_TERM_STOPPERS = frozenset({"then", "else", "with", "|", ")", ",",
                            *DECL_KEYWORDS})

_TERM_BIN = [
    (("or",), 1),
    (("and",), 2),
    (("==", "!=", "<=", "<", ">=", ">"), 4),
    (("+", "-"), 5),
    (("*", "/", "mod"), 6),
]


def _parse_term(cur: _Cursor, level: int = 0) -> Term:
    if level >= len(_TERM_BIN):
        return _parse_term_prefix(cur)
    ops, _prec = _TERM_BIN[level]
    lhs = _parse_term(cur, level + 1)
    while True:
        tok = cur.peek()
        if tok is None or tok.text not in ops:
            return lhs
        cur.next()
        rhs = _parse_term(cur, level + 1)
        lhs = App(tok.text, (lhs, rhs))


def _parse_term_prefix(cur: _Cursor) -> Term:
    if cur.at("not"):
        cur.next()
        return App("not", (_parse_term_prefix(cur),))
    return _parse_term_app(cur)


def _parse_term_app(cur: _Cursor) -> Term:
    head = _parse_term_atom(cur)
    args = []
    while True:
        tok = cur.peek()
        if tok is None or tok.text in _TERM_STOPPERS:
            break
        if tok.kind == "int" or tok.text == "(" or (
                tok.kind == "ident" and tok.text not in KEYWORDS):
            args.append(_parse_term_atom(cur))
        else:
            break
    if not args:
        return head
    if not isinstance(head, Var):
        tok = cur.peek() or Token("sym", "", 0, 0)
        raise ParseError("application head must be a name", tok.line, tok.col)
    return App(head.name, tuple(args))


def _parse_term_atom(cur: _Cursor) -> Term:
    tok = cur.peek()
    if tok is None:
        raise ParseError("unexpected end of term", 0, 0)
    if tok.text == "(":
        cur.next()
        inner = parse_term_tokens(cur)
        cur.expect(")")
        return inner
    if tok.kind == "int":
        cur.next()
        return Const(int(tok.text))
    if tok.text in ("true", "false"):
        cur.next()
        return Const(tok.text == "true")
    if tok.text == "tick":
        cur.next()
        cur.expect("(")
        cost_tok = cur.next()
        if cost_tok.kind != "int":
            raise ParseError("tick cost must be a nonnegative integer literal",
                             cost_tok.line, cost_tok.col)
        cur.expect(",")
        body = parse_term_tokens(cur)
        cur.expect(")")
        return Tick(int(cost_tok.text), body)
    if tok.kind == "ident" and tok.text not in KEYWORDS:
        cur.next()
        return Var(tok.text)
    raise ParseError(f"unexpected token {tok.text!r} in term", tok.line, tok.col)


def parse_term_tokens(cur: _Cursor) -> Term:
    tok = cur.peek()
    if tok is None:
        raise ParseError("empty term", 0, 0)
    if tok.text == "\\":
        cur.next()
        param = cur.expect_ident(binder=True)
        cur.expect(".")
        body = parse_term_tokens(cur)
        # Lambda chains only occur at the top of function bodies; represent
        # them by folding into the enclosing Fix (see parse_function).
        return _Lambda(param.text, body)  # type: ignore[return-value]
    if tok.text == "fix":
        cur.next()
        name = cur.expect_ident(binder=True)
        cur.expect(".")
        body = parse_term_tokens(cur)
        params, inner = _strip_lambdas(body)
        if not params:
            raise ParseError("fix must bind at least one parameter",
                             tok.line, tok.col)
        return Fix(name.text, params, inner)
    if tok.text == "if":
        cur.next()
        cond = parse_term_tokens(cur)
        cur.expect("then")
        then = parse_term_tokens(cur)
        cur.expect("else")
        els = parse_term_tokens(cur)
        return If(cond, then, els)
    if tok.text == "match":
        cur.next()
        scrut = parse_term_tokens(cur)
        cur.expect("with")
        cases = []
        while True:
            ctor = cur.expect_ident()
            binders = []
            while cur.at_kind("ident") and not cur.at("->") \
                    and cur.peek().text not in KEYWORDS:
                binders.append(cur.expect_ident(binder=True).text)
            cur.expect("->")
            body = parse_term_tokens(cur)
            cases.append(MatchCase(ctor.text, tuple(binders), body))
            if cur.at("|"):
                cur.next()
                continue
            break
        return Match(scrut, tuple(cases))
    return _parse_term(cur)


@dataclass(frozen=True)
class _Lambda(Term):
    """Parser-internal lambda node; stripped into Fix params immediately."""

    param: str
    body: Term


def _strip_lambdas(t: Term) -> tuple[tuple[str, ...], Term]:
    params = []
    while isinstance(t, _Lambda):
        params.append(t.param)
        t = t.body
    return tuple(params), t


def parse_term(text: str) -> Term:
    """Parse a standalone term (an .impl file body)."""
    cur = _Cursor(tokenize(text))
    t = parse_term_tokens(cur)
    if not cur.done():
        tok = cur.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    params, inner = _strip_lambdas(t)
    if params:
        return Fix("it", params, inner)
    if isinstance(t, _Lambda):  # unreachable, _strip_lambdas handles it
        raise ParseError("unexpected lambda", 0, 0)
    return t


def parse_function(text: str, default_name: str) -> Fix:
    """Parse an .impl file as a function: either an explicit fix-term or a
    lambda chain, which is wrapped as a fix named `default_name`."""
    cur = _Cursor(tokenize(text))
    t = parse_term_tokens(cur)
    if not cur.done():
        tok = cur.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    params, inner = _strip_lambdas(t)
    if params:
        return Fix(default_name, params, inner)
    if isinstance(t, Fix):
        return t
    raise ParseError("expected a function (fix or lambda)", 1, 1)


# ---------------------------------------------------------------------------
# Logical expressions
# ---------------------------------------------------------------------------

_LOGIC_BIN = [
    (("==>",), 1, True),
    (("or",), 1, False),
    (("and",), 2, False),
    (("==", "!=", "<=", "<", ">=", ">"), 4, False),
    (("+", "-"), 5, False),
    (("*", "/", "mod"), 6, False),
]


def _parse_logic(cur: _Cursor, level: int = 0) -> LogicalExpr:
    if level >= len(_LOGIC_BIN):
        return _parse_logic_prefix(cur)
    ops, _prec, right_assoc = _LOGIC_BIN[level]
    lhs = _parse_logic(cur, level + 1)
    while True:
        tok = cur.peek()
        if tok is None or tok.text not in ops:
            return lhs
        cur.next()
        rhs = _parse_logic(cur, level if right_assoc else level + 1)
        op = "div" if tok.text == "/" else tok.text
        lhs = LBin(op, lhs, rhs)


def _parse_logic_prefix(cur: _Cursor) -> LogicalExpr:
    if cur.at("not"):
        cur.next()
        return LNot(_parse_logic_prefix(cur))
    return _parse_logic_atom(cur)


def _parse_logic_atom(cur: _Cursor) -> LogicalExpr:
    tok = cur.peek()
    if tok is None:
        raise ParseError("unexpected end of expression", 0, 0)
    if tok.text == "(":
        cur.next()
        inner = _parse_logic(cur)
        cur.expect(")")
        return inner
    if tok.kind == "int":
        cur.next()
        return LInt(int(tok.text))
    if tok.text in ("true", "false"):
        cur.next()
        return LBool(tok.text == "true")
    if tok.text == "ite":
        cur.next()
        cur.expect("(")
        c = _parse_logic(cur)
        cur.expect(",")
        a = _parse_logic(cur)
        cur.expect(",")
        b = _parse_logic(cur)
        cur.expect(")")
        return LIte(c, a, b)
    if tok.text in ("floor", "ceil"):
        cur.next()
        cur.expect("(")
        num = _parse_logic(cur)
        cur.expect("/")
        den = _parse_logic(cur)
        cur.expect(")")
        op = "div" if tok.text == "floor" else "cdiv"
        return LBin(op, num, den)
    if tok.kind == "ident" and tok.text not in KEYWORDS:
        cur.next()
        if cur.at("("):
            cur.next()
            args = []
            if not cur.at(")"):
                args.append(_parse_logic(cur))
                while cur.at(","):
                    cur.next()
                    args.append(_parse_logic(cur))
            cur.expect(")")
            return LFun(tok.text, tuple(args))
        return LVar(tok.text)
    raise ParseError(f"unexpected token {tok.text!r} in expression",
                     tok.line, tok.col)


def parse_logic(text: str) -> LogicalExpr:
    cur = _Cursor(tokenize(text))
    e = _parse_logic(cur)
    if not cur.done():
        tok = cur.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return e


# ---------------------------------------------------------------------------
# Types and bounds
# ---------------------------------------------------------------------------

def _parse_base(cur: _Cursor, datatypes: dict[str, DataDecl]) -> BaseType:
    tok = cur.expect_ident()
    if tok.text == "Int":
        return INT
    if tok.text == "Bool":
        return BOOL
    if tok.text in datatypes:
        return DataType(tok.text)
    raise UnboundIdentifier(f"unknown type {tok.text!r}", tok.line, tok.col)


def _parse_scalar(cur: _Cursor, datatypes: dict[str, DataDecl]) -> ScalarType:
    if cur.at("{"):
        cur.next()
        base = _parse_base(cur, datatypes)
        cur.expect("|")
        refinement = _parse_logic(cur)
        cur.expect("}")
        return ScalarType(base, refinement)
    return ScalarType(_parse_base(cur, datatypes), TRUE)


def _parse_arrow(cur: _Cursor, datatypes: dict[str, DataDecl]) -> ArrowType:
    params: list[tuple[str, ScalarType]] = []
    while True:
        # A parameter looks like `name : scalar ->`; the final component is
        # an unnamed scalar result.
        tok = cur.peek()
        nxt = cur.peek(1)
        if tok is not None and tok.kind == "ident" and nxt is not None \
                and nxt.text == ":":
            name = cur.expect_ident(binder=True)
            cur.expect(":")
            ty = _parse_scalar(cur, datatypes)
            cur.expect("->")
            params.append((name.text, ty))
            continue
        result = _parse_scalar(cur, datatypes)
        break
    if not params:
        tok = cur.peek() or Token("sym", "", 0, 0)
        raise ParseError("function type needs named parameters", tok.line, tok.col)
    return ArrowType(tuple(params), result)


def _parse_bound(cur: _Cursor) -> BoundExpr:
    tok = cur.expect("O")
    cur.expect("(")
    a = Fraction(0)
    b = 0
    c = 0
    saw_component = False
    if cur.at("u"):
        cur.next()
        saw_component = True
        a = Fraction(1)
        if cur.at("^"):
            cur.next()
            num = cur.next()
            if num.kind != "int":
                raise ParseError("exponent must be an integer or fraction",
                                 num.line, num.col)
            a = Fraction(int(num.text))
            if cur.at("/"):
                cur.next()
                den = cur.next()
                if den.kind != "int" or int(den.text) == 0:
                    raise ParseError("bad fractional exponent", den.line, den.col)
                a = Fraction(int(num.text), int(den.text))
    if cur.at("log"):
        cur.next()
        saw_component = True
        b = 1
        if cur.at("^"):
            cur.next()
            num = cur.next()
            if num.kind != "int":
                raise ParseError("log exponent must be an integer",
                                 num.line, num.col)
            b = int(num.text)
        cur.expect("u")
    if cur.at("+"):
        cur.next()
        num = cur.next()
        if num.kind != "int":
            raise ParseError("bound constant must be an integer", num.line, num.col)
        c = int(num.text)
    elif not saw_component:
        num = cur.next()
        if num.kind != "int":
            raise ParseError(f"malformed bound near {num.text!r}",
                             num.line, num.col)
        c = int(num.text)
    cur.expect(")")
    return BoundExpr(a, b, c)


def parse_bound(text: str) -> BoundExpr:
    cur = _Cursor(tokenize(text))
    b = _parse_bound(cur)
    if not cur.done():
        tok = cur.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return b


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

def parse_problem(text: str) -> SynthesisProblem:
    """Parse and fully resolve a problem file.

    Raises ParseError / UnboundIdentifier / DuplicateDefinition /
    ReservedSymbol with line and column information.
    """
    cur = _Cursor(tokenize(text))
    datatypes: dict[str, DataDecl] = {}
    ctor_owner: dict[str, str] = {}
    measures: dict[str, MeasureDef] = {}
    axioms: list[LogicalExpr] = []
    auxiliaries: list[AuxDecl] = []
    size_fns: dict[str, SizeFunction] = {}
    options: list[tuple[str, int]] = []
    goal: Optional[tuple[str, ArrowType, BoundExpr]] = None

    while not cur.done():
        tok = cur.peek()
        if tok.text == "data":
            decl = _parse_data(cur, datatypes, ctor_owner)
            datatypes[decl.name] = decl
        elif tok.text in ("measure", "intrinsic"):
            mdef = _parse_measure(cur, datatypes, ctor_owner, measures)
            measures[mdef.name] = mdef
        elif tok.text == "axiom":
            cur.next()
            axioms.append(_parse_logic(cur))
        elif tok.text == "aux":
            auxiliaries.append(_parse_aux(cur, datatypes, auxiliaries))
        elif tok.text == "size":
            cur.next()
            name = cur.expect_ident()
            if name.text in size_fns:
                raise DuplicateDefinition(f"size function for {name.text!r} "
                                          "already defined", name.line, name.col)
            cur.expect("=")
            params = []
            while cur.at("\\"):
                cur.next()
                params.append(cur.expect_ident(binder=True).text)
                cur.expect(".")
            if not params:
                raise ParseError("size function needs lambda parameters",
                                 name.line, name.col)
            body = _parse_logic(cur)
            size_fns[name.text] = SizeFunction(tuple(params), body)
        elif tok.text == "goal":
            if goal is not None:
                raise DuplicateDefinition("goal already defined", tok.line, tok.col)
            cur.next()
            name = cur.expect_ident(binder=True)
            cur.expect("::")
            ty = _parse_arrow(cur, datatypes)
            cur.expect(",")
            bound = _parse_bound(cur)
            goal = (name.text, ty, bound)
        elif tok.text == "option":
            cur.next()
            name = cur.expect_ident()
            value = cur.next()
            if value.kind != "int":
                raise ParseError("option value must be an integer",
                                 value.line, value.col)
            options.append((name.text, int(value.text)))
        else:
            raise ParseError(f"expected a declaration, found {tok.text!r}",
                             tok.line, tok.col)

    if goal is None:
        raise ParseError("problem file has no goal declaration", 1, 1)

    # Every datatype must carry exactly one intrinsic measure.
    for dt in datatypes.values():
        intr = [m for m in measures.values()
                if m.intrinsic and m.subject_sort() == DataType(dt.name)]
        if len(intr) != 1:
            raise ProblemError(
                f"datatype {dt.name} needs exactly one intrinsic measure, "
                f"found {len(intr)}")
        if intr[0].result_sort != INT or intr[0].arity != 1:
            raise ProblemError(
                f"intrinsic measure {intr[0].name} must be {dt.name} -> Int")
        datatypes[dt.name] = DataDecl(dt.name, dt.ctors, intr[0].name)

    ctor_names = frozenset(ctor_owner)
    auxiliaries = [
        AuxDecl(a.name, a.type, a.bound,
                resolve_ctors(a.impl, ctor_names) if a.impl else None)
        for a in auxiliaries]
    problem = SynthesisProblem(
        goal_name=goal[0],
        goal_type=goal[1],
        goal_bound=goal[2],
        auxiliaries=tuple(auxiliaries),
        datatypes=tuple(datatypes.values()),
        measures=tuple(measures.values()),
        size_fns=tuple(size_fns.items()),
        axioms=tuple(axioms),
        options=tuple(options),
    )
    _resolve(problem, ctor_owner)
    return problem


def _parse_data(cur: _Cursor, datatypes, ctor_owner) -> DataDecl:
    kw = cur.expect("data")
    name = cur.expect_ident()
    if name.text in datatypes or name.text in ("Int", "Bool"):
        raise DuplicateDefinition(f"type {name.text!r} already defined",
                                  name.line, name.col)
    cur.expect("=")
    # Constructors may reference the datatype being declared.
    datatypes = dict(datatypes)
    datatypes[name.text] = DataDecl(name.text, (), "")
    ctors = []
    while True:
        cname = cur.expect_ident()
        if cname.text in ctor_owner:
            raise DuplicateDefinition(f"constructor {cname.text!r} already "
                                      "defined", cname.line, cname.col)
        fields = []
        while cur.at_kind("ident") and cur.peek().text in ("Int", "Bool", *datatypes):
            fields.append(_parse_base(cur, datatypes))
        ctors.append(CtorDecl(cname.text, tuple(fields)))
        ctor_owner[cname.text] = name.text
        if cur.at("|"):
            cur.next()
            continue
        break
    return DataDecl(name.text, tuple(ctors), "")


def _parse_measure(cur: _Cursor, datatypes, ctor_owner, measures) -> MeasureDef:
    intrinsic = False
    if cur.at("intrinsic"):
        cur.next()
        intrinsic = True
    cur.expect("measure")
    name = cur.expect_ident()
    if name.text in measures:
        raise DuplicateDefinition(f"measure {name.text!r} already defined",
                                  name.line, name.col)
    cur.expect(":")
    sorts = [_parse_base(cur, datatypes)]
    while cur.at("->"):
        cur.next()
        sorts.append(_parse_base(cur, datatypes))
    if len(sorts) < 2:
        raise ParseError("measure needs argument and result sorts",
                         name.line, name.col)
    arg_sorts, result = tuple(sorts[:-1]), sorts[-1]
    subject_positions = [i for i, s in enumerate(arg_sorts)
                         if isinstance(s, DataType)]
    clauses = []
    while cur.at("|"):
        cur.next()
        head = cur.expect_ident()
        if head.text != name.text:
            raise ParseError(f"clause must define {name.text!r}",
                             head.line, head.col)
        cur.expect("(")
        params: list[str] = []
        ctor = None
        fields: tuple[str, ...] = ()
        subject_index = -1
        idx = 0
        while True:
            arg = cur.expect_ident()
            if arg.text in ctor_owner:
                if ctor is not None:
                    raise ParseError("clause may match one constructor only",
                                     arg.line, arg.col)
                ctor = arg.text
                subject_index = idx
                fs = []
                if cur.at("("):
                    cur.next()
                    while not cur.at(")"):
                        fs.append(cur.expect_ident(binder=True).text)
                        if cur.at(","):
                            cur.next()
                    cur.expect(")")
                fields = tuple(fs)
            else:
                if arg.text in RESERVED_NAMES:
                    raise ReservedSymbol(f"{arg.text!r} is reserved",
                                         arg.line, arg.col)
                params.append(arg.text)
            idx += 1
            if cur.at(","):
                cur.next()
                continue
            break
        cur.expect(")")
        cur.expect("=")
        rhs = _parse_logic(cur)
        if ctor is None:
            raise ParseError("clause head must match a constructor",
                             head.line, head.col)
        if idx != len(arg_sorts):
            raise ParseError(f"clause arity {idx} does not match measure "
                             f"arity {len(arg_sorts)}", head.line, head.col)
        clauses.append(MeasureClause(ctor, tuple(params), subject_index,
                                     fields, rhs))
    if clauses and len(subject_positions) != 1:
        raise ParseError("measures with clauses need exactly one datatype "
                         "argument", name.line, name.col)
    return MeasureDef(name.text, arg_sorts, result, tuple(clauses), intrinsic)


def _parse_aux(cur: _Cursor, datatypes, auxiliaries) -> AuxDecl:
    cur.expect("aux")
    name = cur.expect_ident(binder=True)
    if any(a.name == name.text for a in auxiliaries):
        raise DuplicateDefinition(f"auxiliary {name.text!r} already defined",
                                  name.line, name.col)
    cur.expect("::")
    ty = _parse_arrow(cur, datatypes)
    cur.expect(",")
    bound = _parse_bound(cur)
    impl = None
    if cur.at("="):
        cur.next()
        body = parse_term_tokens(cur)
        params, inner = _strip_lambdas(body)
        if params:
            impl = Fix(name.text, params, inner)
        elif isinstance(body, Fix):
            impl = body
        else:
            raise ParseError("auxiliary implementation must be a function",
                             name.line, name.col)
        if len(impl.params) != len(ty.params):
            raise ParseError("implementation arity does not match signature",
                             name.line, name.col)
    return AuxDecl(name.text, ty, bound, impl)


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------

def _check_logic_scope(e: LogicalExpr, scope: set[str],
                       problem: SynthesisProblem, ctor_owner: dict[str, str],
                       what: str) -> None:
    for fv in sorted(free_logic_vars(e)):
        if fv not in scope:
            raise UnboundIdentifier(f"unbound variable {fv!r} in {what}")
    _check_logic_funs(e, problem, ctor_owner, what)


def _check_logic_funs(e: LogicalExpr, problem, ctor_owner, what) -> None:
    match e:
        case LFun(name, args):
            m = problem.measure(name)
            if m is not None:
                if len(args) != m.arity:
                    raise UnboundIdentifier(
                        f"measure {name} expects {m.arity} arguments in {what}")
            elif name in ctor_owner:
                decl = problem.ctor_owner(name)
                assert decl is not None
                if len(args) != len(decl.ctor(name).fields):
                    raise UnboundIdentifier(
                        f"constructor {name} arity mismatch in {what}")
            else:
                raise UnboundIdentifier(f"unknown function {name!r} in {what}")
            for a in args:
                _check_logic_funs(a, problem, ctor_owner, what)
        case LBin(_, lhs, rhs):
            _check_logic_funs(lhs, problem, ctor_owner, what)
            _check_logic_funs(rhs, problem, ctor_owner, what)
        case LNot(arg):
            _check_logic_funs(arg, problem, ctor_owner, what)
        case LIte(c, t, f):
            for part in (c, t, f):
                _check_logic_funs(part, problem, ctor_owner, what)
        case _:
            pass


def _check_arrow(ty: ArrowType, problem, ctor_owner, what: str) -> None:
    seen: set[str] = set()
    scope: set[str] = set()
    for pname, pty in ty.params:
        if pname in seen:
            raise DuplicateDefinition(f"duplicate parameter {pname!r} in {what}")
        seen.add(pname)
        _check_logic_scope(pty.refinement, scope | {"v"}, problem, ctor_owner,
                           what)
        scope.add(pname)
    _check_logic_scope(ty.result.refinement, scope | {"v"}, problem,
                       ctor_owner, what)


def _check_impl_scope(impl: Fix, problem: SynthesisProblem,
                      ctor_owner: dict[str, str]) -> None:
    known = ({a.name for a in problem.auxiliaries} | set(PRIMITIVES)
             | set(ctor_owner) | {impl.name})
    free = free_term_vars(impl)
    for fv in sorted(free):
        if fv not in known:
            raise UnboundIdentifier(
                f"unbound identifier {fv!r} in implementation of {impl.name}")


def _resolve(problem: SynthesisProblem, ctor_owner: dict[str, str]) -> None:
    names_in_use: set[str] = set(PRIMITIVES)
    for dt in problem.datatypes:
        for c in dt.ctors:
            names_in_use.add(c.name)
    for m in problem.measures:
        if m.name in names_in_use:
            raise DuplicateDefinition(f"name {m.name!r} already in use")
        names_in_use.add(m.name)
        subject = m.subject_sort()
        for cl in m.clauses:
            owner = problem.ctor_owner(cl.ctor)
            if owner is None or DataType(owner.name) != subject:
                raise UnboundIdentifier(
                    f"clause constructor {cl.ctor} does not belong to "
                    f"{subject}")
            fields = owner.ctor(cl.ctor).fields
            if len(cl.fields) != len(fields):
                raise UnboundIdentifier(
                    f"constructor {cl.ctor} pattern arity mismatch")
            scope = set(cl.params) | set(cl.fields)
            _check_logic_scope(cl.rhs, scope, problem, ctor_owner,
                               f"measure {m.name}")
    for a in problem.auxiliaries:
        if a.name in names_in_use:
            raise DuplicateDefinition(f"name {a.name!r} already in use")
        names_in_use.add(a.name)
        _check_arrow(a.type, problem, ctor_owner, f"auxiliary {a.name}")
    if problem.goal_name in names_in_use:
        raise DuplicateDefinition(f"name {problem.goal_name!r} already in use")
    _check_arrow(problem.goal_type, problem, ctor_owner, "goal")
    for ax in problem.axioms:
        # Free variables of axioms are implicitly universally quantified.
        _check_logic_funs(ax, problem, ctor_owner, "axiom")
    for fname, fn in problem.size_fns:
        if fname != problem.goal_name and problem.aux(fname) is None:
            raise UnboundIdentifier(f"size function for unknown {fname!r}")
        target = problem.goal_type if fname == problem.goal_name \
            else problem.aux(fname).type
        if len(fn.params) != len(target.params):
            raise ProblemError(f"size function for {fname} has wrong arity")
        for p, (_, pty) in zip(fn.params, target.params):
            if pty.base == BOOL and p in free_logic_vars(fn.body):
                raise ProblemError(
                    f"size function for {fname} may not depend on Bool "
                    f"parameter {p}")
        _check_logic_scope(fn.body, set(fn.params), problem, ctor_owner,
                           f"size function for {fname}")
    for a in problem.auxiliaries:
        if a.impl is not None:
            _check_impl_scope(a.impl, problem, ctor_owner)
    sz = problem.size_fn(problem.goal_name)
    if sz is None:
        raise ProblemError(f"goal {problem.goal_name} needs a size function")
    for a in problem.auxiliaries:
        if not a.bound.is_constant() and problem.size_fn(a.name) is None:
            raise ProblemError(
                f"auxiliary {a.name} has non-constant cost and needs a "
                f"size function")
