"""A small expression language for scalar functions of ``t``.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = number | "t" | "pi" | "e"
            | func "(" expr ")" | "pow" "(" expr "," expr ")"
            | "(" expr ")" ;
    func    = "sin" | "cos" | "exp" | "ln" | "sqrt" ;

Expressions evaluate on floats or numpy arrays.  :meth:`ScalarFunc.jet`
propagates a degree-2 truncated Taylor expansion (:class:`Jet2`) through the
tree, giving the value together with exact first and second derivatives.
"""

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import DomainError, ParseError

__all__ = ["Jet2", "ScalarFunc", "parse_expr", "eval_jet", "to_text"]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Call]


# --------------------------------------------------------------------------
# Lexer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else f"token {val!r}"
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "t":
                return Var()
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, (arg,))
            if val == "pow":
                self.expect("(")
                a = self.expr()
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return BinOp("^", a, b)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else f"token {val!r}"
        raise ParseError(f"syntax error at {found}", pos)


def to_text(node):
    """Print an AST back to parseable text (binary operations parenthesized)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"


def _has_var(node):
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _has_var(node.arg)
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    return any(_has_var(a) for a in node.args)


def fold_constants(node):
    """Collapse every variable-free subtree into a single number."""
    if isinstance(node, (Num, Var)):
        return node
    if not _has_var(node):
        return Num(float(_eval(node, 0.0)))
    if isinstance(node, Neg):
        return Neg(fold_constants(node.arg))
    if isinstance(node, BinOp):
        return BinOp(node.op, fold_constants(node.left), fold_constants(node.right))
    return Call(node.name, tuple(fold_constants(a) for a in node.args))


# --------------------------------------------------------------------------
# Value evaluation


def _is_integer(x):
    return float(x).is_integer()


def _pow_value(a, b):
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.ndim(b_arr) == 0 and _is_integer(b_arr):
        if b_arr < 0 and np.any(a_arr == 0):
            raise DomainError("zero raised to a negative power")
        return np.power(a_arr, b_arr)
    if np.any(a_arr < 0):
        raise DomainError("non-integer power of a negative base")
    if np.any((a_arr == 0) & (b_arr <= 0)):
        raise DomainError("zero raised to a non-positive power")
    return np.power(a_arr, b_arr)


def _eval(node, t):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.arg, t)
    if isinstance(node, BinOp):
        a = _eval(node.left, t)
        b = _eval(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            return a / b
        return _pow_value(a, b)
    x = _eval(node.args[0], t)
    name = node.name
    if name == "sin":
        return np.sin(x)
    if name == "cos":
        return np.cos(x)
    if name == "exp":
        return np.exp(x)
    if name == "ln":
        if np.any(np.asarray(x) <= 0):
            raise DomainError("ln of a non-positive value")
        return np.log(x)
    if np.any(np.asarray(x) < 0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(x)


# --------------------------------------------------------------------------
# Jets


@dataclass(frozen=True)
class Jet2:
    """Value with first and second derivative; fields may be numpy arrays."""

    v: object
    d1: object
    d2: object

    @staticmethod
    def const(c):
        return Jet2(c, 0.0 * c, 0.0 * c)

    def __add__(self, o):
        o = _lift(o)
        return Jet2(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, o):
        o = _lift(o)
        return Jet2(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, o):
        return _lift(o) - self

    def __neg__(self):
        return Jet2(-self.v, -self.d1, -self.d2)

    def __mul__(self, o):
        o = _lift(o)
        return Jet2(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self * _lift(o).reciprocal()

    def __rtruediv__(self, o):
        return _lift(o) * self.reciprocal()

    def chain(self, f0, f1, f2):
        """Compose with a scalar function whose derivatives at ``v`` are given."""
        return Jet2(f0, f1 * self.d1, f2 * self.d1 * self.d1 + f1 * self.d2)

    def reciprocal(self):
        if np.any(np.asarray(self.v) == 0):
            raise DomainError("division by zero")
        inv = 1.0 / self.v
        return self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def exp(self):
        e = np.exp(self.v)
        return self.chain(e, e, e)

    def log(self):
        if np.any(np.asarray(self.v) <= 0):
            raise DomainError("ln of a non-positive value")
        inv = 1.0 / self.v
        return self.chain(np.log(self.v), inv, -inv * inv)

    def sin(self):
        s, c = np.sin(self.v), np.cos(self.v)
        return self.chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.v), np.cos(self.v)
        return self.chain(c, -s, -c)

    def sqrt(self):
        if np.any(np.asarray(self.v) <= 0):
            raise DomainError("sqrt is not differentiable at non-positive values")
        r = np.sqrt(self.v)
        return self.chain(r, 0.5 / r, -0.25 / (r * self.v))

    def powc(self, c):
        """Raise to a constant power ``c``."""
        v = np.asarray(self.v, dtype=float)
        if _is_integer(c):
            k = int(c)
            if k < 0 and np.any(v == 0):
                raise DomainError("zero raised to a negative power")
            f1 = k * np.power(v, k - 1) if k != 0 else np.zeros_like(v)
            f2 = k * (k - 1) * np.power(v, k - 2) if k not in (0, 1) else np.zeros_like(v)
            return self.chain(np.power(v, k), f1, f2)
        if np.any(v < 0):
            raise DomainError("non-integer power of a negative base")
        if np.any(v == 0) and c < 2.0:
            raise DomainError("power not twice differentiable at zero base")
        return self.chain(
            np.power(v, c), c * np.power(v, c - 1.0), c * (c - 1.0) * np.power(v, c - 2.0)
        )


def _lift(x):
    return x if isinstance(x, Jet2) else Jet2.const(x)


def _jet(node, t):
    if isinstance(node, Num):
        return Jet2.const(node.value + 0.0 * t)
    if isinstance(node, Var):
        one = 1.0 + 0.0 * t
        return Jet2(t + 0.0, one, 0.0 * t)
    if isinstance(node, Neg):
        return -_jet(node.arg, t)
    if isinstance(node, BinOp):
        if node.op == "^":
            base = _jet(node.left, t)
            if not _has_var(node.right):
                return base.powc(float(_eval(node.right, 0.0)))
            if np.any(np.asarray(base.v) <= 0):
                raise DomainError("variable exponent requires a positive base")
            return (_jet(node.right, t) * base.log()).exp()
        a = _jet(node.left, t)
        b = _jet(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    x = _jet(node.args[0], t)
    return {"sin": x.sin, "cos": x.cos, "exp": x.exp, "ln": x.log, "sqrt": x.sqrt}[node.name]()


# --------------------------------------------------------------------------
# Public surface


class ScalarFunc:
    """Parsed scalar function of ``t``.

    Instances are immutable; calling evaluates the value, :meth:`jet` the
    value with its first two derivatives.  Both accept arrays.
    """

    __slots__ = ("source", "ast")

    def __init__(self, source, ast):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "ast", ast)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarFunc is immutable")

    def __repr__(self):
        return f"ScalarFunc({self.source!r})"

    def __call__(self, t):
        out = _eval(self.ast, np.asarray(t, dtype=float) if np.ndim(t) else float(t))
        if np.ndim(t):
            return np.broadcast_to(np.asarray(out, dtype=float), np.shape(t)).copy()
        return float(out)

    def jet(self, t):
        tt = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        j = _jet(self.ast, tt)
        if np.ndim(t):
            shape = np.shape(t)
            return Jet2(*(np.broadcast_to(np.asarray(x, dtype=float), shape).copy()
                          for x in (j.v, j.d1, j.d2)))
        return Jet2(float(j.v), float(j.d1), float(j.d2))

    def deriv(self, t):
        """First derivative only."""
        return self.jet(t).d1

    @property
    def is_constant(self):
        return not _has_var(self.ast)

    def text(self):
        return to_text(self.ast)


def parse_expr(text, fold=True):
    """Parse ``text`` into a :class:`ScalarFunc`.

    Raises :class:`~fracvx.errors.ParseError` carrying the offending position.
    With ``fold`` (default) constant subtrees are pre-evaluated.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0)
    ast = _Parser(text).parse()
    if fold:
        ast = fold_constants(ast)
    return ScalarFunc(text, ast)


def eval_jet(f, t):
    """Value, first and second derivative of ``f`` at ``t`` as a :class:`Jet2`."""
    return f.jet(t)
