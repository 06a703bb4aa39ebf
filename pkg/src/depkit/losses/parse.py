"""Parser for the loss mini-language.

Grammar (a subset of Python expression syntax)::

    expr  := term ('+' term)*
    term  := [number '*'] call | call ['*' number] | number '*' '(' expr ')'
    call  := atom '(' [arg (',' arg)*] ')'
    arg   := value | name '=' value

Atoms::

    h(k=K)                     negative H-score
    nested_h(k=K)              negative nested H-score (also weights=[...])
    logloss(k=K)               log loss, f_1 fixed to 1
    svm(d=D, lambda=L)         hinge loss, k = d + 1
    fdiv(u=kl|chi2|square|exp, k=K)
    sqdist(joint|product)      E||f - g||^2
    pdist(p=P, measure=...)    E||f - g||_p
    lse(measure=...)           E log sum exp(f - g)
    inner(u=..., measure=...)  E u(f^T g)
    l2(f|g|fg)                 E||f||^2 and/or E||g||^2
    lp(f|g|fg, p=P)            E||f||_p
    constrain(f|g, ball(p=P, r=R) | orthant | fixed(j=J, c=C) | mean0)
    moment(expr, nu=mean_penalty|cross_trace|softplus, c=C)
    raw_index()                non-D counterexample (for checker demos)

Example: ``nested_h(k=3) + 0.01*l2(f) + 0.01*l2(g)``.
"""

from __future__ import annotations

import ast
import re

from ..errors import LossSyntaxError
from .core import (
    Aggregate,
    Ball,
    ConstraintIndicator,
    ExtendedLogLoss,
    ExtendedSvm,
    FDivVariational,
    FixedCoordinate,
    HScore,
    Loss,
    MeanZero,
    MomentWrapper,
    NestedHScore,
    NormRegularizer,
    Orthant,
    PairwiseConvex,
    RawSymbolLoss,
)


def _literal(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
        return node.value
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
        return -node.operand.value
    if isinstance(node, (ast.List, ast.Tuple)):
        return [_literal(e) for e in node.elts]
    if isinstance(node, ast.Call):
        return node
    raise LossSyntaxError(f"unsupported argument {ast.unparse(node)!r}")


def _args(call: ast.Call, names: list[str]) -> dict:
    out = {}
    if len(call.args) > len(names):
        raise LossSyntaxError(f"too many positional arguments in {ast.unparse(call)!r}")
    for name, node in zip(names, call.args):
        out[name] = _literal(node)
    for kw in call.keywords:
        if kw.arg not in names:
            raise LossSyntaxError(f"unknown argument {kw.arg!r} in {ast.unparse(call)!r}")
        out[kw.arg] = _literal(kw.value)
    return out


def _int(v, name):
    if v is None:
        return None
    if not isinstance(v, int) or isinstance(v, bool):
        raise LossSyntaxError(f"{name} must be an integer")
    if v < 1:
        raise LossSyntaxError(f"{name} must be positive, got {v}")
    return v


def _side(v):
    if v not in ("f", "g", "fg"):
        raise LossSyntaxError(f"side must be f, g or fg, got {v!r}")
    return v


def _constraint_set(node, side):
    if isinstance(node, str):
        name, a = node, {}
    elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        a = _args(node, {"ball": ["p", "r"], "fixed": ["j", "c"]}.get(name, []))
    else:
        raise LossSyntaxError("constraint set must be ball(...), orthant, fixed(...) or mean0")
    if name == "ball":
        return Ball(side, float(a.get("p", 2.0)), float(a.get("r", 1.0)))
    if name == "orthant":
        return Orthant(side)
    if name == "fixed":
        return FixedCoordinate(side, int(a.get("j", 0)), float(a.get("c", 1.0)))
    if name == "mean0":
        return MeanZero(side)
    raise LossSyntaxError(f"unknown constraint set {name!r}")


def _atom(call: ast.Call) -> Loss:
    if not isinstance(call.func, ast.Name):
        raise LossSyntaxError(f"bad atom {ast.unparse(call.func)!r}")
    name = call.func.id
    if name == "h":
        return HScore(_int(_args(call, ["k"]).get("k"), "k"))
    if name == "nested_h":
        a = _args(call, ["k", "weights"])
        return NestedHScore(_int(a.get("k"), "k"), a.get("weights"))
    if name == "logloss":
        return ExtendedLogLoss(_int(_args(call, ["k"]).get("k"), "k"))
    if name == "svm":
        a = _args(call, ["d", "lam"])
        return ExtendedSvm(_int(a.get("d"), "d"), float(a.get("lam", 0.1)))
    if name == "fdiv":
        a = _args(call, ["u", "k"])
        return FDivVariational(a.get("u", "kl"), _int(a.get("k"), "k"))
    if name in ("sqdist", "lse"):
        a = _args(call, ["measure"])
        return PairwiseConvex(name, a.get("measure", "joint"))
    if name == "pdist":
        a = _args(call, ["p", "measure"])
        return PairwiseConvex("pdist", a.get("measure", "joint"), p=float(a.get("p", 2.0)))
    if name == "inner":
        a = _args(call, ["u", "measure"])
        return PairwiseConvex("inner", a.get("measure", "product"), u=a.get("u", "square"))
    if name in ("l2", "lp"):
        a = _args(call, ["side", "p", "squared"])
        side = _side(a.get("side", "fg"))
        p = 2.0 if name == "l2" else float(a.get("p", 2.0))
        squared = True if name == "l2" else bool(a.get("squared", 0))
        return NormRegularizer(float("f" in side), float("g" in side), p=p, squared=squared)
    if name == "constrain":
        if len(call.args) != 2:
            raise LossSyntaxError("constrain takes (side, set)")
        side = _side(_literal(call.args[0]))
        if side == "fg":
            raise LossSyntaxError("constrain applies to one side")
        return ConstraintIndicator(_constraint_set(_literal(call.args[1]), side))
    if name == "moment":
        if not call.args:
            raise LossSyntaxError("moment needs an inner loss")
        inner = _expr(call.args[0])
        a = _args(ast.Call(func=call.func, args=[], keywords=call.keywords), ["nu", "c"])
        return MomentWrapper(inner, a.get("nu", "mean_penalty"), float(a.get("c", 0.1)))
    if name == "raw_index":
        _args(call, [])
        return RawSymbolLoss()
    raise LossSyntaxError(f"unknown atom {name!r}")


def _number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        if node.value < 0:
            raise LossSyntaxError("weights must be non-negative")
        return float(node.value)
    return None


def _expr(node) -> Loss:
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
        return Aggregate([(1.0, _expr(node.left)), (1.0, _expr(node.right))])
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        w, other = _number(node.left), node.right
        if w is None:
            w, other = _number(node.right), node.left
        if w is None:
            raise LossSyntaxError(f"products need a numeric weight: {ast.unparse(node)!r}")
        return Aggregate([(w, _expr(other))])
    if isinstance(node, ast.Call):
        return _atom(node)
    raise LossSyntaxError(f"unsupported expression {ast.unparse(node)!r}")


def parse_loss(text: str) -> Loss:
    """Parse a loss specification string into a loss expression."""
    src = re.sub(r"\blambda\s*=", "lam=", text.strip())
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise LossSyntaxError(f"cannot parse {text!r}: {exc.msg}") from None
    loss = _expr(tree.body)
    if isinstance(loss, Aggregate) and len(loss.terms) == 1 and loss.terms[0][0] == 1.0:
        return loss.terms[0][1]
    return loss
