"""
Expression language for scalar fields on a chart.

Grammar (Pratt parser, loosest to tightest):

    + -            left associative
    * /            left associative
    unary -
    ^              right associative
    f(x)           sin cos tan exp ln sqrt abs, one argument
    number, identifier, ( expr )

Identifiers resolve to chart coordinates (Var) first, then to declared
parameters (Param). "**" is rejected; the power operator is "^".
"""

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

import ad_core
from ad_core import Jet, jet_apply, lift_point
from errors import ExprSyntaxError, UnboundParam, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Const | Var | Param | Unary | Binary | Call


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),−])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int  # byte offset into the source


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(source, pos)
        if not match or match.end() == pos:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ExprSyntaxError(f"Unexpected character {source[bad]!r}", source, _byte_offset(source, bad))
        kind = match.lastgroup
        start = match.start(kind)
        text = match.group(kind)
        if text == "**":
            raise ExprSyntaxError("'**' is not an operator; use '^' for powers", source, _byte_offset(source, start))
        if text == "−":
            text = "-"
        tokens.append(_Token(kind, text, _byte_offset(source, start)))
        pos = match.end()
    tokens.append(_Token("end", "", _byte_offset(source, len(source))))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_BINARY_POWER = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_POWER = 30


class _Parser:
    def __init__(self, source: str, variables: frozenset[str], params: frozenset[str]):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0
        self.variables = variables
        self.params = params

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def fail(self, message: str, token: _Token):
        raise ExprSyntaxError(message, self.source, token.offset)

    def expect(self, text: str) -> _Token:
        token = self.advance()
        if token.text != text:
            self.fail(f"Expected '{text}' but found {token.text or 'end of input'!r}", token)
        return token

    def parse(self) -> Expr:
        expr = self.expression(0)
        token = self.peek()
        if token.kind != "end":
            self.fail(f"Unexpected {token.text!r}", token)
        return expr

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while True:
            token = self.peek()
            lbp = _BINARY_POWER.get(token.text, 0) if token.kind == "op" else 0
            if lbp <= rbp:
                return left
            self.advance()
            # ^ is right associative
            right = self.expression(lbp - 1 if token.text == "^" else lbp)
            left = Binary(token.text, left, right)

    def nud(self, token: _Token) -> Expr:
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                self.fail(f"Number {token.text!r} is out of range", token)
            return Const(value)
        if token.kind == "name":
            if self.peek().text == "(" and token.text in FUNCTIONS:
                self.advance()
                arg = self.expression(0)
                if self.peek().text == ",":
                    self.fail(f"'{token.text}' takes a single argument", self.peek())
                self.expect(")")
                return Call(token.text, arg)
            if token.text in self.variables:
                return Var(token.text)
            if token.text in self.params:
                return Param(token.text)
            raise UnknownIdentifier(token.text, token.offset)
        if token.text == "-":
            return Unary("neg", self.expression(_UNARY_POWER))
        if token.text == "+":
            return self.expression(_UNARY_POWER)
        if token.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        self.fail(f"Unexpected {token.text or 'end of input'!r}", token)


def _vocabulary(chart) -> frozenset[str]:
    names = getattr(chart, "names", chart)
    return frozenset(names)


def parse(source: str, chart, params: Iterable[str] = ()) -> Expr:
    """Parse `source` against a chart (or any iterable of variable names)."""
    if not source or not source.strip():
        raise ExprSyntaxError("Empty expression", source or "", 0)
    return _Parser(source, _vocabulary(chart), frozenset(params)).parse()


# ---------------------------------------------------------------------------
# Printing and inspection
# ---------------------------------------------------------------------------

def to_text(expr: Expr) -> str:
    """Fully parenthesised text that parses back to the same AST."""
    match expr:
        case Const(value):
            if not math.isfinite(value):
                raise ValueError(f"Constant {value!r} has no text form")
            return repr(float(value)) if value >= 0 else f"(-{float(-value)!r})"
        case Var(name) | Param(name):
            return name
        case Unary(_, operand):
            return f"(-{to_text(operand)})"
        case Binary(op, left, right):
            return f"({to_text(left)} {op} {to_text(right)})"
        case Call(fn, arg):
            return f"{fn}({to_text(arg)})"
    raise TypeError(f"Not an expression: {expr!r}")


def free_variables(expr: Expr) -> set[str]:
    match expr:
        case Var(name):
            return {name}
        case Const() | Param():
            return set()
        case Unary(_, operand) | Call(_, operand):
            return free_variables(operand)
        case Binary(_, left, right):
            return free_variables(left) | free_variables(right)
    raise TypeError(f"Not an expression: {expr!r}")


def free_params(expr: Expr) -> set[str]:
    match expr:
        case Param(name):
            return {name}
        case Const() | Var():
            return set()
        case Unary(_, operand) | Call(_, operand):
            return free_params(operand)
        case Binary(_, left, right):
            return free_params(left) | free_params(right)
    raise TypeError(f"Not an expression: {expr!r}")


def substitute(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace Var or Param leaves named in `mapping` by the mapped subtrees."""
    match expr:
        case Var(name) | Param(name):
            return mapping.get(name, expr)
        case Const():
            return expr
        case Unary(op, operand):
            return Unary(op, substitute(operand, mapping))
        case Call(fn, arg):
            return Call(fn, substitute(arg, mapping))
        case Binary(op, left, right):
            return Binary(op, substitute(left, mapping), substitute(right, mapping))
    raise TypeError(f"Not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_BINARY_OPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}


def evaluate_env(expr: Expr, env: Mapping[str, Jet], params: Mapping[str, float], dim: int) -> Jet:
    """Evaluate on jets bound by variable name; params become order-0 constants."""
    match expr:
        case Const(value):
            return Jet.constant(value, dim)
        case Var(name):
            return env[name]
        case Param(name):
            if name not in params:
                raise UnboundParam(name)
            return Jet.constant(float(params[name]), dim)
        case Unary(_, operand):
            return jet_apply("neg", evaluate_env(operand, env, params, dim))
        case Call(fn, arg):
            return jet_apply(fn, evaluate_env(arg, env, params, dim))
        case Binary(op, left, right):
            return jet_apply(_BINARY_OPS[op], evaluate_env(left, env, params, dim),
                             evaluate_env(right, env, params, dim))
    raise TypeError(f"Not an expression: {expr!r}")


def eval_jet(expr: Expr, point: Sequence[float], params: Mapping[str, float], order: int, chart) -> Jet:
    """Evaluate `expr` at a phase point of `chart` with derivatives up to `order`."""
    coords = lift_point(np.asarray(point, dtype=float), order)
    env = dict(zip(chart.names, coords))
    return evaluate_env(expr, env, params, len(coords))


_FLOAT_FUNCTIONS = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs,
    "tan": ad_core.tan, "ln": ad_core.ln, "sqrt": ad_core.sqrt,
}


def evaluate(expr: Expr, values: Mapping[str, float], params: Mapping[str, float]) -> float:
    """Plain float evaluation, no derivatives."""
    match expr:
        case Const(value):
            return value
        case Var(name):
            return float(values[name])
        case Param(name):
            if name not in params:
                raise UnboundParam(name)
            return float(params[name])
        case Unary(_, operand):
            return -evaluate(operand, values, params)
        case Call(fn, arg):
            return _FLOAT_FUNCTIONS[fn](evaluate(arg, values, params))
        case Binary(op, left, right):
            a = evaluate(left, values, params)
            b = evaluate(right, values, params)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                return a * ad_core.float_op("recip", b)
            return jet_apply("pow", Jet.constant(a, 1), Jet.constant(b, 1)).value
    raise TypeError(f"Not an expression: {expr!r}")
