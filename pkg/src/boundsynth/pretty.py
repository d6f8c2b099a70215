"""Printers for terms, logical expressions, types, and bounds.

`print_term` round-trips through `parser.parse_term` (structural equality),
which the test suite checks property-style.
"""

from __future__ import annotations

from .lang import (App, ArrowType, BoundExpr, Const, CORR_VAR, Fix, If, LBin,
                   LBool, LFun, LInt, LIte, LNot, LVar, LogicalExpr, Match,
                   RecurrenceAnnotation, RefinementType, ScalarType, Term,
                   Tick, TRUE, Var)

# Precedence levels, loosest first.
_PREC = {
    "or": 1, "==>": 1,
    "and": 2,
    "==": 4, "!=": 4, "<=": 4, "<": 4, ">=": 4, ">": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "div": 6, "cdiv": 6, "mod": 6,
}
_NOT_PREC = 3
_APP_PREC = 7


def _parens(s: str, need: bool) -> str:
    return f"({s})" if need else s


def print_term(t: Term, prec: int = 0) -> str:
    match t:
        case Var(name):
            return name
        case Const(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            return str(value)
        case App(head, args):
            if head in _PREC and len(args) == 2:
                p = _PREC[head]
                lhs = print_term(args[0], p)
                rhs = print_term(args[1], p + 1)
                return _parens(f"{lhs} {head} {rhs}", prec > p)
            if head == "not" and len(args) == 1:
                return _parens(f"not {print_term(args[0], _NOT_PREC)}",
                               prec > _NOT_PREC)
            if not args:
                return head
            inner = " ".join(print_term(a, _APP_PREC + 1) for a in args)
            return _parens(f"{head} {inner}", prec > _APP_PREC)
        case If(c, a, b):
            s = (f"if {print_term(c)} then {print_term(a)} "
                 f"else {print_term(b)}")
            return _parens(s, prec > 0)
        case Match(scrut, cases):
            parts = []
            for case in cases:
                binders = "".join(f" {b}" for b in case.binders)
                body = print_term(case.body)
                if isinstance(case.body, Match):
                    body = f"({body})"
                parts.append(f"{case.ctor}{binders} -> {body}")
            s = f"match {print_term(scrut)} with " + " | ".join(parts)
            return _parens(s, prec > 0)
        case Fix(name, params, body):
            lams = "".join(f"\\{p}. " for p in params)
            return _parens(f"fix {name}. {lams}{print_term(body)}", prec > 0)
        case Tick(cost, body):
            return f"tick({cost}, {print_term(body)})"
    raise ValueError(f"not a term: {t!r}")


def print_lambda(params: tuple[str, ...], body: Term) -> str:
    return "".join(f"\\{p}. " for p in params) + print_term(body)


def print_logic(e: LogicalExpr, prec: int = 0) -> str:
    match e:
        case LVar(name):
            return "?l" if name == CORR_VAR else name
        case LInt(value):
            return str(value) if value >= 0 else f"(0 - {-value})"
        case LBool(value):
            return "true" if value else "false"
        case LFun(name, args):
            inner = ", ".join(print_logic(a) for a in args)
            return f"{name}({inner})"
        case LNot(arg):
            return _parens(f"not {print_logic(arg, _NOT_PREC)}", prec > _NOT_PREC)
        case LIte(c, a, b):
            return (f"ite({print_logic(c)}, {print_logic(a)}, "
                    f"{print_logic(b)})")
        case LBin("cdiv", lhs, rhs):
            return f"ceil({print_logic(lhs)} / {print_logic(rhs)})"
        case LBin(op, lhs, rhs):
            shown = "/" if op == "div" else op
            p = _PREC[op]
            s = f"{print_logic(lhs, p)} {shown} {print_logic(rhs, p + 1)}"
            return _parens(s, prec > p)
    raise ValueError(f"not a logical expression: {e!r}")


def print_type(ty: RefinementType) -> str:
    match ty:
        case ScalarType(base, refinement):
            if refinement == TRUE:
                return str(base)
            return f"{{{base} | {print_logic(refinement)}}}"
        case ArrowType(params, result):
            parts = [f"{n}:{print_type(t)}" for n, t in params]
            parts.append(print_type(result))
            return " -> ".join(parts)
    raise ValueError(f"not a type: {ty!r}")


def print_bound(b: BoundExpr) -> str:
    return str(b)


def print_annotation(a: RecurrenceAnnotation) -> str:
    costs = ", ".join(f"[{rc.count}, {print_logic(rc.size)}]" for rc in a.costs)
    return f"([{costs}]; {a.bound})" if costs else f"([]; {a.bound})"
