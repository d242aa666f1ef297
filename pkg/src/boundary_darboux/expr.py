"""Closed-form expressions in x and y: parsing, unparsing, evaluation.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | 'x' | 'y' | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  The
exponent of ``^`` must be free of variables; it is folded to a float at
parse time.  Only smooth functions are accepted, so ``abs`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import (
    DomainError,
    EmptyInput,
    ExpressionSyntaxError,
    NonDifferentiable,
    UnknownIdentifier,
)
from .jets import Jet, Jet2

MAX_EXPRESSION_LENGTH = 64 * 1024

VARIABLES = ("x", "y")
FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "tanh", "cosh", "sinh")
_REJECTED = {
    "abs": "abs is not smooth; only smooth functions are allowed",
    "sign": "sign is not smooth; only smooth functions are allowed",
    "floor": "floor is not smooth; only smooth functions are allowed",
    "ceil": "ceil is not smooth; only smooth functions are allowed",
}


# -- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    if isinstance(node, Pow):
        return _POW_PREC
    return _ATOM_PREC


def _fmt_number(v: float) -> str:
    s = repr(float(v))
    if s in ("inf", "nan", "-inf"):
        raise ValueError(f"cannot format non-finite literal {s}")
    return s


def unparse(node) -> str:
    """Text that parses back to exactly ``node``."""
    if isinstance(node, Num):
        if node.value < 0:
            return "(" + "-" + _fmt_number(-node.value) + ")"
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    if isinstance(node, Neg):
        inner = unparse(node.operand)
        if _prec(node.operand) < _NEG_PREC:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        base = unparse(node.base)
        if _prec(node.base) <= _POW_PREC or (isinstance(node.base, Num) and node.base.value < 0):
            base = f"({base})"
        return f"{base}^{_fmt_number(node.exponent)}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = unparse(node.left)
        if _prec(node.left) < p:
            left = f"({left})"
        right = unparse(node.right)
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_variables(node.operand if isinstance(node, Neg) else node.arg)
    if isinstance(node, Pow):
        return free_variables(node.base)
    return free_variables(node.left) | free_variables(node.right)


def substitute(node, mapping: dict):
    """Replace variables by sub-trees, e.g. ``{"y": Neg(Var("y"))}``."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


# -- tokenizer / parser -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


_PRIMARY_START = ("number", "x", "y", "function", "(")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def _expect(self, op: str):
        if not self._accept(op):
            raise ExpressionSyntaxError(self._describe(), self.tok.pos, (op,))

    def _describe(self) -> str:
        return "unexpected end of input" if self.tok.kind == "end" else f"unexpected token {self.tok.text!r}"

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionSyntaxError(self._describe(), self.tok.pos, ("+", "-", "*", "/", "^", "end"))
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self._accept("-"):
            return Neg(self.unary())
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self._accept("^"):
            start = self.tok.pos
            exponent = self.unary()
            if free_variables(exponent):
                raise ExpressionSyntaxError("exponent must be a constant", start)
            try:
                value = float(_evaluate_node(exponent, 0.0, 0.0))
            except (DomainError, ZeroDivisionError, OverflowError) as exc:
                raise ExpressionSyntaxError(f"invalid constant exponent ({exc})", start) from None
            if not np.isfinite(value):
                raise ExpressionSyntaxError("exponent is not finite", start)
            return Pow(base, value)
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            name = tok.text
            if name in VARIABLES:
                return Var(name)
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            raise UnknownIdentifier(name, tok.pos, _REJECTED.get(name, ""))
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        raise ExpressionSyntaxError(self._describe(), tok.pos, _PRIMARY_START)


# -- evaluation ------------------------------------------------------------------

def _check(cond, message: str, node):
    if np.any(cond):
        raise DomainError(f"{message} in {unparse(node)}", unparse(node))


def _numeric_call(node: Call, u):
    f = node.func
    if f == "log":
        _check(u <= 0, "log of a non-positive number", node)
        return np.log(u)
    if f == "sqrt":
        _check(u < 0, "sqrt of a negative number", node)
        return np.sqrt(u)
    with np.errstate(over="ignore"):
        return getattr(np, f)(u)


def _numeric_pow(node: Pow, u):
    p = node.exponent
    if float(p).is_integer():
        if p < 0:
            _check(u == 0, "zero raised to a negative power", node)
        return np.power(u, p) if isinstance(u, np.ndarray) else float(u) ** int(p)
    _check(u < 0, "non-integer power of a negative number", node)
    if p < 0:
        _check(u == 0, "zero raised to a negative power", node)
    return np.power(u, p)


def _evaluate_node(node, x, y):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_evaluate_node(node.operand, x, y)
    if isinstance(node, BinOp):
        a = _evaluate_node(node.left, x, y)
        b = _evaluate_node(node.right, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        _check(np.asarray(b) == 0, "division by zero", node)
        return a / b
    if isinstance(node, Pow):
        return _numeric_pow(node, _evaluate_node(node.base, x, y))
    if isinstance(node, Call):
        return _numeric_call(node, _evaluate_node(node.arg, x, y))
    raise TypeError(f"not an expression node: {node!r}")


_JET_FUNCS = {
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
    "sin": jets.sin,
    "cos": jets.cos,
    "tanh": jets.tanh,
    "cosh": jets.cosh,
    "sinh": jets.sinh,
}


def _jet_node(node, x: Jet, y: Jet):
    # Constants stay plain floats until they meet a jet.
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_jet_node(node.operand, x, y)
    if isinstance(node, BinOp):
        a = _jet_node(node.left, x, y)
        b = _jet_node(node.right, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        b0 = b.value if isinstance(b, Jet) else b
        _check(np.asarray(b0) == 0, "division by zero", node)
        return a / b
    try:
        if isinstance(node, Pow):
            u = _jet_node(node.base, x, y)
            if not isinstance(u, Jet):
                return _numeric_pow(node, u)
            return jets.power(u, node.exponent)
        if isinstance(node, Call):
            u = _jet_node(node.arg, x, y)
            if not isinstance(u, Jet):
                return _numeric_call(node, u)
            return _JET_FUNCS[node.func](u)
    except NonDifferentiable as exc:
        raise NonDifferentiable(f"{exc} in {unparse(node)}", unparse(node)) from None
    except DomainError as exc:
        if exc.subexpression is not None:
            raise
        raise DomainError(f"{exc} in {unparse(node)}", unparse(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class ScalarExpression:
    """A parsed expression in x and y.  Immutable; safe to share."""

    ast: object
    text: str = ""

    def __str__(self):
        return unparse(self.ast)

    def evaluate(self, x, y):
        """Value at (x, y); accepts scalars or broadcastable arrays."""
        out = _evaluate_node(self.ast, x, y)
        if np.ndim(out) == 0 and np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(out)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(x), np.shape(y))).astype(float)

    def jet(self, x, y, order: int = 2) -> Jet:
        """Order-``order`` jet at (x, y); array inputs give a batched jet."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        out = _jet_node(self.ast, Jet.variable(x, "x", order), Jet.variable(y, "y", order))
        if not isinstance(out, Jet):
            out = Jet.constant(out, order, x.shape)
        return out

    def jet2(self, x: float, y: float) -> Jet2:
        return Jet2.from_jet(self.jet(float(x), float(y), 2))

    def substitute(self, mapping: dict) -> "ScalarExpression":
        new = substitute(self.ast, mapping)
        return ScalarExpression(new, unparse(new))

    def negated(self) -> "ScalarExpression":
        return ScalarExpression(Neg(self.ast), unparse(Neg(self.ast)))

    def shifted(self, c: float) -> "ScalarExpression":
        """``self - c``."""
        node = BinOp("-", self.ast, Num(c)) if c >= 0 else BinOp("+", self.ast, Num(-c))
        return ScalarExpression(node, unparse(node))


def parse_expression(text: str, max_length: int = MAX_EXPRESSION_LENGTH) -> ScalarExpression:
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    if len(text.encode("utf-8")) > max_length:
        raise ExpressionSyntaxError(f"expression longer than {max_length} bytes", max_length)
    if not text.strip():
        raise EmptyInput("empty expression")
    return ScalarExpression(_Parser(text).parse(), text)


def evaluate(expr: ScalarExpression, point) -> float:
    x, y = point
    return expr.evaluate(float(x), float(y))


def evaluate_jet2(expr: ScalarExpression, point) -> Jet2:
    x, y = point
    return expr.jet2(x, y)
