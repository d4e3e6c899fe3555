"""Arithmetic expressions for parameterised model entries.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?          # right-associative
    unary  := '-' unary | atom
    atom   := number | identifier | 'sqrt' '(' expr ')' | '(' expr ')'

Exponents must be constant (no identifiers).  Unary minus binds tighter than
``^``, so ``-2^2`` is ``(-2)^2``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

FUNCTIONS = ("sqrt",)


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, source: str, pos: int):
        super().__init__(f"{message} at column {pos + 1} in {source!r}")
        self.source = source
        self.pos = pos


class ExprEvalError(ValueError):
    pass


class UnboundIdentifierError(ExprEvalError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier {name!r}")
        self.name = name


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", src, bad)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.take()
        if val != text or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.src, pos)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            node = BinOp(self.take()[1], node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            node = BinOp(self.take()[1], node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.unary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            pos = self.take()[2]
            exponent = self.factor()
            names = free_variables(exponent)
            if names:
                raise ExprSyntaxError(f"exponent must be constant, found {sorted(names)[0]!r}",
                                      self.src, pos + 1)
            return BinOp("^", base, exponent)
        return base

    def unary(self) -> Node:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            return Var(val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"expected a number, identifier or '(', found {found}", self.src, pos)


def parse(src: str) -> Node:
    """Parse ``src`` into an expression tree."""
    p = _Parser(src)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {val!r}", src, pos)
    return node


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return free_variables(node.left) | free_variables(node.right)


def evaluate(node: Node, env: Mapping[str, float] | None = None) -> float:
    env = env or {}
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name not in env:
            raise UnboundIdentifierError(node.name)
        return float(env[node.name])
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Call):
        x = evaluate(node.arg, env)
        if x < 0:
            raise ExprEvalError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b == 0:
            raise ExprEvalError("division by zero")
        return a / b
    try:
        out = a ** b
    except (OverflowError, ZeroDivisionError) as exc:
        raise ExprEvalError(f"cannot evaluate {a!r}^{b!r}: {exc}") from exc
    if isinstance(out, complex):
        raise ExprEvalError(f"{a!r}^{b!r} is not real")
    return out


def evaluate_text(src: str, env: Mapping[str, float] | None = None) -> float:
    return evaluate(parse(src), env)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _level(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 4
    return 5


def _wrap(node: Node, min_level: int) -> str:
    s = to_text(node)
    return s if _level(node) >= min_level else f"({s})"


def _num_text(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_text(node: Node) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 4)
    p = _PREC[node.op]
    if node.op == "^":
        return f"{_wrap(node.left, 4)}^{_wrap(node.right, 3)}"
    # left-associative: the right operand needs strictly higher precedence
    return f"{_wrap(node.left, p)}{node.op}{_wrap(node.right, p + 1)}"
