"""Expression trees for objectives and constraint maps.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ["-"] atom ["^" integer]
    atom   := number | ident | func "(" expr ")" | "(" expr ")"
    ident  := "x" integer            (1-based variable index)

``-a^2`` means ``-(a^2)``.  Derivatives are forward-mode dual numbers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, ExpressionError, NonSmoothError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")
NONSMOOTH = frozenset({"abs"})


class Dual:
    """Value together with its gradient with respect to all variables."""

    __slots__ = ("v", "d")

    def __init__(self, v: float, d: np.ndarray):
        self.v = v
        self.d = d

    def __add__(self, o):
        return Dual(self.v + o.v, self.d + o.d)

    def __sub__(self, o):
        return Dual(self.v - o.v, self.d - o.d)

    def __mul__(self, o):
        return Dual(self.v * o.v, self.d * o.v + o.d * self.v)

    def __truediv__(self, o):
        if o.v == 0.0:
            raise DomainError("division by zero")
        q = self.v / o.v
        return Dual(q, (self.d - o.d * q) / o.v)

    def __neg__(self):
        return Dual(-self.v, -self.d)

    def chain(self, value: float, slope: float) -> "Dual":
        return Dual(value, self.d * slope)


class Expr:
    """Base class of expression nodes (immutable, structural equality)."""

    __slots__ = ()

    def eval(self, x) -> float:
        raise NotImplementedError

    def dual(self, x, seeds) -> Dual:
        raise NotImplementedError

    def max_var(self) -> int:
        return 0

    def is_smooth(self) -> bool:
        return True

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def eval(self, x):
        return self.value

    def dual(self, x, seeds):
        return Dual(self.value, np.zeros(len(x)))


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based

    def eval(self, x):
        return float(x[self.index - 1])

    def dual(self, x, seeds):
        return Dual(float(x[self.index - 1]), seeds[self.index - 1])

    def max_var(self):
        return self.index


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def eval(self, x):
        return -self.arg.eval(x)

    def dual(self, x, seeds):
        return -self.arg.dual(x, seeds)

    def max_var(self):
        return self.arg.max_var()

    def is_smooth(self):
        return self.arg.is_smooth()


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, x):
        a, b = self.left.eval(x), self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0.0:
            raise DomainError("division by zero")
        return a / b

    def dual(self, x, seeds):
        a, b = self.left.dual(x, seeds), self.right.dual(x, seeds)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def max_var(self):
        return max(self.left.max_var(), self.right.max_var())

    def is_smooth(self):
        return self.left.is_smooth() and self.right.is_smooth()


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def eval(self, x):
        b = self.base.eval(x)
        e = abs(self.exponent)
        r = 1.0
        for _ in range(e):
            r *= b
        if self.exponent < 0:
            if r == 0.0:
                raise DomainError("negative power of zero")
            r = 1.0 / r
        return r

    def dual(self, x, seeds):
        b = self.base.dual(x, seeds)
        r = Dual(1.0, np.zeros(len(x)))
        for _ in range(abs(self.exponent)):
            r = r * b
        if self.exponent < 0:
            r = Dual(1.0, np.zeros(len(x))) / r
        return r

    def max_var(self):
        return self.base.max_var()

    def is_smooth(self):
        return self.base.is_smooth()


def _apply(name: str, v: float) -> float:
    if name == "log":
        if v <= 0.0:
            raise DomainError(f"log of non-positive value {v}")
        return math.log(v)
    if name == "sqrt":
        if v < 0.0:
            raise DomainError(f"sqrt of negative value {v}")
        return math.sqrt(v)
    if name == "exp":
        return math.exp(v)
    if name == "sin":
        return math.sin(v)
    if name == "cos":
        return math.cos(v)
    return abs(v)


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def eval(self, x):
        return _apply(self.name, self.arg.eval(x))

    def dual(self, x, seeds):
        if self.name in NONSMOOTH:
            raise NonSmoothError(f"{self.name} cannot be differentiated")
        a = self.arg.dual(x, seeds)
        v = a.v
        if self.name == "sin":
            return a.chain(math.sin(v), math.cos(v))
        if self.name == "cos":
            return a.chain(math.cos(v), -math.sin(v))
        if self.name == "exp":
            e = math.exp(v)
            return a.chain(e, e)
        if self.name == "log":
            if v <= 0.0:
                raise DomainError(f"log of non-positive value {v}")
            return a.chain(math.log(v), 1.0 / v)
        if v <= 0.0:
            raise DomainError(f"sqrt is not differentiable at {v}")
        r = math.sqrt(v)
        return a.chain(r, 0.5 / r)

    def max_var(self):
        return self.arg.max_var()

    def is_smooth(self):
        return self.name not in NONSMOOTH and self.arg.is_smooth()


def evaluate(e: Expr, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise DomainError("evaluation point must be finite")
    return e.eval(x)


def value_and_grad(e: Expr, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise DomainError("evaluation point must be finite")
    seeds = np.eye(len(x))
    d = e.dual(x, seeds)
    return d.v, np.array(d.d, dtype=float)


def grad(e: Expr, x) -> np.ndarray:
    return value_and_grad(e, x)[1]


# ---------------------------------------------------------------- printing

_ATOMIC = (Const, Var, Func)


def to_string(e: Expr) -> str:
    """Text form that parses back to an equal tree."""
    if isinstance(e, Const):
        if e.value < 0 or not math.isfinite(e.value):
            raise ExpressionError(f"literal {e.value} has no textual form")
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = e.arg
        if isinstance(inner, _ATOMIC) or isinstance(inner, Pow):
            return "-" + to_string(inner)
        return f"-({to_string(inner)})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if not isinstance(e.base, _ATOMIC):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, BinOp):
        def wrap(c):
            s = to_string(c)
            return s if isinstance(c, _ATOMIC + (Pow,)) else f"({s})"

        return f"{wrap(e.left)} {e.op} {wrap(e.right)}"
    raise TypeError(f"unknown node {e!r}")


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, tok, line, pos - line_start + 1))
        else:
            for k, ch in enumerate(tok):
                if ch == "\n":
                    line += 1
                    line_start = pos + k + 1
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, n: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExpressionError(msg, tok.line, tok.col)

    def expect(self, text):
        t = self.peek()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.take()

    def parse(self):
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        neg = False
        if self.peek().text == "-":
            self.take()
            neg = True
        e = self.atom()
        if self.peek().text == "^":
            self.take()
            sign = 1
            if self.peek().text == "-":
                self.take()
                sign = -1
            t = self.peek()
            if t.kind != "num" or not t.text.isdigit():
                self.fail("exponent must be an integer")
            self.take()
            e = Pow(e, sign * int(t.text))
        return Neg(e) if neg else e

    def atom(self):
        t = self.peek()
        if t.kind == "num":
            self.take()
            return Const(float(t.text))
        if t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Func(t.text, e)
            m = re.fullmatch(r"x(\d+)", t.text)
            if not m:
                self.fail(f"unknown identifier {t.text!r}", t)
            k = int(m.group(1))
            if k < 1 or k > self.n:
                self.fail(f"variable {t.text} outside dimension {self.n}", t)
            return Var(k)
        self.fail(f"unexpected {t.text or 'end of input'!r}")


def parse(text: str, n: int) -> Expr:
    if n < 0:
        raise DimensionError("dimension must be nonnegative")
    return _Parser(text, n).parse()


def as_expr(e, n: int) -> Expr:
    """Accept an ``Expr``, a string or a number."""
    if isinstance(e, Expr):
        if e.max_var() > n:
            raise DimensionError(f"expression uses x{e.max_var()} but n = {n}")
        return e
    if isinstance(e, (int, float)):
        return Const(float(e)) if e >= 0 else Neg(Const(float(-e)))
    return parse(str(e), n)
