"""Closed expression language for coefficients, inner maps and right-hand sides.

Expressions are immutable trees of frozen dataclasses.  They evaluate on
scalars or numpy arrays, real or complex, differentiate symbolically and
propagate truncated Taylor series (jets), which is how high-order derivative
norms are obtained without expression swell.

Grammar (whitespace insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | 'x' | 'n' | '(' expr ')'
             | ('sin' | 'cos' | 'neg') '(' expr ')'
             | ('iter' | 'iter_scaled') '(' fexpr ',' expr [',' expr] ')'
    fexpr   := 'sin' | 'cos' | 'neg' | expr

Exponents and iteration counts must fold to integer constants.  The optional
third argument of ``iter``/``iter_scaled`` is the point the iterate is
applied at (default ``x``); the printer needs it for derivatives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationDomainError, ExprSyntaxError, UnknownIdentifierError

__all__ = [
    "Expr", "Const", "Var", "Index", "Neg", "Sin", "Cos", "Add", "Sub", "Mul",
    "Div", "Pow", "Iterate", "ScaledIterate", "X", "parse_expr", "to_text",
    "evaluate", "eval_real", "eval_complex", "derivative", "iterate",
    "scaled_iterate", "substitute", "bind", "taylor_coefficients",
    "denominators", "check_denominators",
]


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __call__(self, z):
        return evaluate(self, z)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    pass


@dataclass(frozen=True, slots=True)
class Index(Expr):
    """The unbound family index ``n``."""


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Iterate(Expr):
    """``f`` composed with itself ``m`` times, applied at ``arg``.

    ``f`` is a function of its own ``x``; substitution never enters it.
    """

    f: Expr
    m: int
    arg: Expr = Var()


@dataclass(frozen=True, slots=True)
class ScaledIterate(Expr):
    """``f^<m>(arg / 2^(m-1))``."""

    f: Expr
    m: int
    arg: Expr = Var()


X = Var()
_ZERO = Const(0.0)
_ONE = Const(1.0)

_UNARY = {"sin": Sin, "cos": Cos, "neg": Neg}


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            pos += len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.advance()
        if val != value:
            shown = val if kind != "end" else "end of input"
            raise ExprSyntaxError(f"expected {value!r}, found {shown!r}", pos, self.text)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        val = self.peek()[1]
        if val == "-":
            self.advance()
            return Neg(self.unary())
        if val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] == "^":
            pos = self.advance()[2]
            exponent = self._integer(self.unary(), pos, "power exponent", minimum=0)
            return Pow(base, exponent)
        return base

    def primary(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if val == "x":
                return X
            if val == "n":
                return Index() if self.n is None else Const(float(self.n))
            if val in _UNARY:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _UNARY[val](arg)
            if val in ("iter", "iter_scaled"):
                return self.iteration(val, pos)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos, self.text)
        shown = val if kind != "end" else "end of input"
        raise ExprSyntaxError(f"unexpected token {shown!r}", pos, self.text)

    def iteration(self, name, pos):
        self.expect("(")
        kind, val, _ = self.peek()
        if kind == "name" and val in _UNARY and self.tokens[self.i + 1][1] == ",":
            self.advance()
            f = _UNARY[val](X)
        else:
            f = self.expr()
        self.expect(",")
        count_pos = self.peek()[2]
        m = self._integer(self.expr(), count_pos, "iteration count", minimum=1)
        arg = X
        if self.peek()[1] == ",":
            self.advance()
            arg = self.expr()
        self.expect(")")
        cls = Iterate if name == "iter" else ScaledIterate
        return cls(f, m, arg)

    def _integer(self, node, pos, what, minimum):
        if _mentions(node, (Var, Iterate, ScaledIterate)):
            raise ExprSyntaxError(f"{what} must be constant", pos, self.text)
        if _mentions(node, (Index,)):
            raise ExprSyntaxError(f"{what} depends on the unbound family index n", pos, self.text)
        value = float(evaluate(node, 0.0))
        if not value.is_integer():
            raise ExprSyntaxError(f"{what} must be an integer, got {value!r}", pos, self.text)
        if value < minimum:
            raise ExprSyntaxError(f"{what} must be >= {minimum}, got {int(value)}", pos, self.text)
        return int(value)


def parse_expr(text: str, n: int | None = None) -> Expr:
    """Parse expression source.  ``n``, if given, binds the family index."""
    if n is not None and (int(n) != n or n < 1):
        raise ValueError(f"family index must be a positive integer, got {n!r}")
    return _Parser(text, n).parse()


def _mentions(node, types):
    if isinstance(node, types):
        return True
    return any(_mentions(child, types) for child in _children(node))


def _children(node):
    if isinstance(node, (Neg, Sin, Cos)):
        return (node.arg,)
    if isinstance(node, (Add, Sub, Mul, Div)):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, (Iterate, ScaledIterate)):
        return (node.f, node.arg)
    return ()


# ---------------------------------------------------------------- printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def to_text(node: Expr) -> str:
    """Render an expression in the grammar accepted by :func:`parse_expr`."""
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Index):
        return "n"
    if isinstance(node, (Sin, Cos)):
        name = "sin" if isinstance(node, Sin) else "cos"
        return f"{name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return f"-{_wrap(node.arg, 3, strict=False)}"
    if isinstance(node, (Add, Sub, Mul, Div)):
        prec = _PREC[type(node)]
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        sep = f" {op} " if prec == 1 else op
        # right operand always bracketed at equal precedence: float ops do not reassociate
        return f"{_wrap(node.left, prec, False)}{sep}{_wrap(node.right, prec, True)}"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, 5, False)}^{node.exponent}"
    if isinstance(node, (Iterate, ScaledIterate)):
        name = "iter" if isinstance(node, Iterate) else "iter_scaled"
        f = node.f
        if isinstance(f, (Sin, Cos, Neg)) and f.arg == X:
            ftext = {Sin: "sin", Cos: "cos", Neg: "neg"}[type(f)]
        else:
            ftext = to_text(f)
        if node.arg == X:
            return f"{name}({ftext}, {node.m})"
        return f"{name}({ftext}, {node.m}, {to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _wrap(node, prec, strict):
    text = to_text(node)
    inner = _PREC.get(type(node), 5)
    if inner < prec or (strict and inner == prec):
        return f"({text})"
    return text


# ---------------------------------------------------------------- evaluation

def _ipow(z, p):
    result = None
    base = z
    while p:
        if p & 1:
            result = base if result is None else result * base
        p >>= 1
        if p:
            base = base * base
    if result is None:
        return np.ones_like(z) if isinstance(z, np.ndarray) else type(z)(1)
    return result


def _sin(w):
    if np.iscomplexobj(w):
        x, y = w.real, w.imag
        return np.sin(x) * np.cosh(y) + 1j * (np.cos(x) * np.sinh(y))
    return np.sin(w)


def _cos(w):
    if np.iscomplexobj(w):
        x, y = w.real, w.imag
        return np.cos(x) * np.cosh(y) - 1j * (np.sin(x) * np.sinh(y))
    return np.cos(w)


def _ev(node, z):
    t = type(node)
    if t is Var:
        return z
    if t is Const:
        return node.value + 0 * z
    if t is Add:
        return _ev(node.left, z) + _ev(node.right, z)
    if t is Sub:
        return _ev(node.left, z) - _ev(node.right, z)
    if t is Mul:
        return _ev(node.left, z) * _ev(node.right, z)
    if t is Div:
        num = _ev(node.left, z)
        den = _ev(node.right, z)
        if np.any(den == 0):
            raise EvaluationDomainError(f"division by zero in {to_text(node)}")
        return num / den
    if t is Neg:
        return -_ev(node.arg, z)
    if t is Sin:
        return _sin(_ev(node.arg, z))
    if t is Cos:
        return _cos(_ev(node.arg, z))
    if t is Pow:
        return _ipow(_ev(node.base, z), node.exponent)
    if t is Iterate or t is ScaledIterate:
        w = _ev(node.arg, z)
        if t is ScaledIterate:
            w = w / 2.0 ** (node.m - 1)
        for _ in range(node.m):
            w = _ev(node.f, w)
        return w
    if t is Index:
        raise EvaluationDomainError("the family index n is unbound; use bind()")
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(f: Expr, z):
    """Evaluate on a scalar or array; the dtype follows the argument."""
    if np.isscalar(z):
        z = np.asarray(z)[()]
    else:
        z = np.asarray(z)
    with np.errstate(all="ignore"):
        return _ev(f, z)


def eval_real(f: Expr, x: float) -> float:
    return float(evaluate(f, np.float64(x)))


def eval_complex(f: Expr, z: complex) -> complex:
    return complex(evaluate(f, np.complex128(z)))


# ---------------------------------------------------------------- construction

def _is_const(node, value=None):
    return type(node) is Const and (value is None or node.value == value)


def _add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Sub(a, b)


def _neg(a):
    if _is_const(a):
        return Const(-a.value)
    if type(a) is Neg:
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Mul(a, b)


def _div(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    return Div(a, b)


def _pow(a, p):
    if p == 0:
        return _ONE
    if p == 1:
        return a
    return Pow(a, p)


def iterate(f: Expr, m: int) -> Expr:
    """The ``m``-fold composition of ``f``; ``iterate(f, 1)`` is ``f``."""
    if int(m) != m or m < 1:
        raise ValueError(f"iteration count must be a positive integer, got {m!r}")
    return f if m == 1 else Iterate(f, int(m))


def scaled_iterate(f: Expr, m: int) -> Expr:
    if int(m) != m or m < 1:
        raise ValueError(f"iteration count must be a positive integer, got {m!r}")
    return ScaledIterate(f, int(m))


def substitute(node: Expr, value: Expr) -> Expr:
    """Replace the variable ``x`` by ``value`` (not inside iterated maps)."""
    t = type(node)
    if t is Var:
        return value
    if t in (Const, Index):
        return node
    if t in (Neg, Sin, Cos):
        return t(substitute(node.arg, value))
    if t in (Add, Sub, Mul, Div):
        return t(substitute(node.left, value), substitute(node.right, value))
    if t is Pow:
        return Pow(substitute(node.base, value), node.exponent)
    if t in (Iterate, ScaledIterate):
        return t(node.f, node.m, substitute(node.arg, value))
    raise TypeError(f"not an expression node: {node!r}")


def bind(node: Expr, n: int) -> Expr:
    """Substitute the family index ``n`` everywhere, including iterated maps."""
    t = type(node)
    if t is Index:
        return Const(float(n))
    if t in (Const, Var):
        return node
    if t in (Neg, Sin, Cos):
        return t(bind(node.arg, n))
    if t in (Add, Sub, Mul, Div):
        return t(bind(node.left, n), bind(node.right, n))
    if t is Pow:
        return Pow(bind(node.base, n), node.exponent)
    if t in (Iterate, ScaledIterate):
        return t(bind(node.f, n), node.m, bind(node.arg, n))
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------- derivative

def derivative(f: Expr) -> Expr:
    """Exact symbolic derivative with light constant folding."""
    t = type(f)
    if t in (Const, Index):
        return _ZERO
    if t is Var:
        return _ONE
    if t is Neg:
        return _neg(derivative(f.arg))
    if t is Sin:
        return _mul(Cos(f.arg), derivative(f.arg))
    if t is Cos:
        return _mul(_neg(Sin(f.arg)), derivative(f.arg))
    if t is Add:
        return _add(derivative(f.left), derivative(f.right))
    if t is Sub:
        return _sub(derivative(f.left), derivative(f.right))
    if t is Mul:
        return _add(_mul(derivative(f.left), f.right), _mul(f.left, derivative(f.right)))
    if t is Div:
        if _is_const(f.right):
            return _div(derivative(f.left), f.right)
        num = _sub(_mul(derivative(f.left), f.right), _mul(f.left, derivative(f.right)))
        return _div(num, _pow(f.right, 2))
    if t is Pow:
        p = f.exponent
        if p == 0:
            return _ZERO
        return _mul(_mul(Const(float(p)), _pow(f.base, p - 1)), derivative(f.base))
    if t is Iterate:
        # (f^m)'(a) = a' * prod_{j<m} f'(f^j(a))
        df = derivative(f.f)
        result = derivative(f.arg)
        for j in range(f.m):
            if j == 0:
                inner = f.arg
            elif j == 1:
                inner = substitute(f.f, f.arg)
            else:
                inner = Iterate(f.f, j, f.arg)
            result = _mul(substitute(df, inner), result)
        return result
    if t is ScaledIterate:
        scale = 2.0 ** (f.m - 1)
        inner = _div(f.arg, Const(scale))
        return derivative(Iterate(f.f, f.m, inner))
    raise TypeError(f"not an expression node: {f!r}")


# ---------------------------------------------------------------- Taylor jets

def _jmul(a, b):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(out.shape[0]):
        out[k] = np.einsum("i...,i...->...", a[: k + 1], b[k::-1])
    return out


def _jdiv(a, b):
    if np.any(b[0] == 0):
        raise EvaluationDomainError("division by zero in Taylor propagation")
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(out.shape[0]):
        acc = a[k] - np.einsum("i...,i...->...", b[1 : k + 1], out[k - 1 :: -1][:k]) if k else a[0]
        out[k] = acc / b[0]
    return out


def _jsincos(u):
    s = np.zeros_like(u)
    c = np.zeros_like(u)
    s[0] = np.sin(u[0])
    c[0] = np.cos(u[0])
    ju = np.arange(u.shape[0]).reshape((-1,) + (1,) * (u.ndim - 1)) * u
    for k in range(1, u.shape[0]):
        s[k] = np.einsum("i...,i...->...", ju[1 : k + 1], c[k - 1 :: -1][:k]) / k
        c[k] = -np.einsum("i...,i...->...", ju[1 : k + 1], s[k - 1 :: -1][:k]) / k
    return s, c


def _jpow(a, p):
    result = None
    base = a
    while p:
        if p & 1:
            result = base if result is None else _jmul(result, base)
        p >>= 1
        if p:
            base = _jmul(base, base)
    if result is None:
        result = np.zeros_like(a)
        result[0] = 1
    return result


def _jet(node, xj):
    t = type(node)
    if t is Var:
        return xj
    if t is Const:
        out = np.zeros_like(xj)
        out[0] = node.value
        return out
    if t is Add:
        return _jet(node.left, xj) + _jet(node.right, xj)
    if t is Sub:
        return _jet(node.left, xj) - _jet(node.right, xj)
    if t is Neg:
        return -_jet(node.arg, xj)
    if t is Mul:
        return _jmul(_jet(node.left, xj), _jet(node.right, xj))
    if t is Div:
        return _jdiv(_jet(node.left, xj), _jet(node.right, xj))
    if t is Sin:
        return _jsincos(_jet(node.arg, xj))[0]
    if t is Cos:
        return _jsincos(_jet(node.arg, xj))[1]
    if t is Pow:
        return _jpow(_jet(node.base, xj), node.exponent)
    if t is Iterate or t is ScaledIterate:
        w = _jet(node.arg, xj)
        if t is ScaledIterate:
            w = w / 2.0 ** (node.m - 1)
        for _ in range(node.m):
            w = _jet(node.f, w)
        return w
    if t is Index:
        raise EvaluationDomainError("the family index n is unbound; use bind()")
    raise TypeError(f"not an expression node: {node!r}")


def taylor_coefficients(f: Expr, x, order: int) -> np.ndarray:
    """Normalized derivatives ``f^(j)(x) / j!`` for ``j = 0..order``.

    Returns an array of shape ``(order + 1,) + shape(x)``.
    """
    x = np.asarray(x)
    xj = np.zeros((order + 1,) + x.shape, dtype=np.result_type(x, np.float64))
    xj[0] = x
    if order >= 1:
        xj[1] = 1
    with np.errstate(all="ignore"):
        return _jet(f, xj)


# ---------------------------------------------------------------- obligations

def denominators(f: Expr) -> list[Expr]:
    """All denominator subexpressions, in a fixed traversal order."""
    found = []

    def walk(node):
        if type(node) is Div:
            found.append(node.right)
        if type(node) in (Iterate, ScaledIterate):
            walk(node.arg)
            return
        for child in _children(node):
            walk(child)

    walk(f)
    return found


def check_denominators(f: Expr, points) -> None:
    """Raise :class:`EvaluationDomainError` if a denominator vanishes at ``points``.

    Denominators inside iterated maps live in the map's own variable; they are
    covered only by evaluating the whole expression.
    """
    points = np.asarray(points)
    value = evaluate(f, points)
    if not np.all(np.isfinite(value)):
        raise EvaluationDomainError(f"{to_text(f)} is not finite on the sampled set")
    for den in denominators(f):
        if _mentions(den, (Index,)):
            continue
        vals = evaluate(den, points)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.min(np.abs(vals)) <= 1e-12 * scale:
            k = int(np.argmin(np.abs(vals)))
            raise EvaluationDomainError(
                f"denominator {to_text(den)} nearly vanishes at {points.flat[k]!r}"
            )
