"""A tiny real-valued expression language: parse, print, evaluate, differentiate.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' power)?
    primary := number | variable | ident '(' expr ')' | '(' expr ')'

``pi`` and ``e`` are constants. The exponent of ``^`` can never start with a
unary minus, so ``2^-x`` is rejected; write ``2^(-x)``.

Expressions are trees of frozen dataclasses and compare structurally.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Union

import mpmath

from holderkit.errors import DomainError, MissingDerivative, ParseError

__all__ = [
    "FUNCTIONS",
    "Expr",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Neg",
    "Call",
    "RealFn",
    "parse",
    "to_text",
    "differentiate",
    "evaluate",
    "evaluate_mp",
    "substitute",
    "free_variables",
]

#: Function names accepted in calls. ``sign`` appears in derivatives of ``abs``.
FUNCTIONS = frozenset({"sqrt", "sin", "cos", "asin", "acos", "atan", "exp", "ln", "abs", "sign"})
CONSTANTS = {"pi": math.pi, "e": math.e}


class _Node:
    """Caches the structural hash; trees produced by repeated differentiation get large."""

    __slots__ = ()

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self.__dataclass_fields__))
            object.__setattr__(self, "_h", h)
            return h


def _node(cls):
    cls = dataclass(frozen=True, eq=True)(cls)
    cls.__hash__ = _Node.__hash__
    return cls


@_node
class Const(_Node):
    value: float


@_node
class Var(_Node):
    name: str = "x"


@_node
class Add(_Node):
    left: "Expr"
    right: "Expr"


@_node
class Sub(_Node):
    left: "Expr"
    right: "Expr"


@_node
class Mul(_Node):
    left: "Expr"
    right: "Expr"


@_node
class Div(_Node):
    left: "Expr"
    right: "Expr"


@_node
class Pow(_Node):
    base: "Expr"
    exponent: "Expr"


@_node
class Neg(_Node):
    arg: "Expr"


@_node
class Call(_Node):
    name: str
    arg: "Expr"


Expr = Union[Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call]
_BINARY = (Add, Sub, Mul, Div)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number, ident, op, end
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", byte,
                             {"number", "identifier", "operator"})
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte))
        pos = m.end()
        byte += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: tuple[str, ...]):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = variables

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _is(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def _expect(self, text: str) -> None:
        if not self._is(text):
            raise ParseError(f"unexpected {self.tok.text or 'end of input'!r}", self.tok.offset, {repr(text)})
        self.i += 1

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset,
                             {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self._is("*") or self._is("/"):
            op = self.tok.text
            self.i += 1
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expr:
        if self._is("-"):
            self.i += 1
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self._is("^"):
            self.i += 1
            return Pow(base, self.power())
        return base

    def _primary_expected(self) -> set[str]:
        return {"number", "'('", "function name", *(repr(v) for v in self.variables), "'pi'", "'e'"}

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in self.variables:
                return Var(tok.text)
            if tok.text in CONSTANTS:
                return Const(CONSTANTS[tok.text])
            if tok.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(tok.text, arg)
            raise ParseError(f"unknown identifier {tok.text!r}", tok.offset, self._primary_expected())
        if self._is("("):
            self.i += 1
            node = self.expr()
            self._expect(")")
            return node
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset, self._primary_expected())


def parse(source: str, variables: tuple[str, ...] = ("x",)) -> Expr:
    """Parse ``source`` into an expression tree.

    Args:
        source: Expression text, e.g. ``"asin(1-x)"``.
        variables: Identifiers treated as free variables.

    Raises:
        ParseError: With the byte offset and the set of acceptable tokens.
    """
    return _Parser(source, tuple(variables)).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _is_atom(node: Expr) -> bool:
    return isinstance(node, (Var, Call)) or (isinstance(node, Const) and node.value >= 0)


def to_text(node: Expr) -> str:
    """Render a tree in the grammar; ``parse(to_text(t)) == t`` for parsed trees."""
    if isinstance(node, Const):
        s = _fmt_number(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if isinstance(node.arg, _BINARY):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        base = to_text(node.base)
        if not _is_atom(node.base):
            base = f"({base})"
        exp = to_text(node.exponent)
        if not (_is_atom(node.exponent) or isinstance(node.exponent, Pow)):
            exp = f"({exp})"
        return f"{base}^{exp}"
    if isinstance(node, (Add, Sub)):
        op = " + " if isinstance(node, Add) else " - "
        right = to_text(node.right)
        if isinstance(node.right, (Add, Sub)):
            right = f"({right})"
        return to_text(node.left) + op + right
    if isinstance(node, (Mul, Div)):
        op = " * " if isinstance(node, Mul) else " / "
        left = to_text(node.left)
        if isinstance(node.left, (Add, Sub)):
            left = f"({left})"
        right = to_text(node.right)
        if isinstance(node.right, _BINARY):
            right = f"({right})"
        return left + op + right
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Construction helpers with constant folding
# ---------------------------------------------------------------------------

def _const_value(node: Expr) -> float | None:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Const):
        return -node.arg.value
    return None


def _fold(value: float) -> Expr | None:
    return Const(value) if math.isfinite(value) else None


def _add(a: Expr, b: Expr) -> Expr:
    va, vb = _const_value(a), _const_value(b)
    if va == 0:
        return b
    if vb == 0:
        return a
    if va is not None and vb is not None:
        return Const(va + vb)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    va, vb = _const_value(a), _const_value(b)
    if vb == 0:
        return a
    if va == 0:
        return _neg(b)
    if va is not None and vb is not None:
        return Const(va - vb)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    va = _const_value(a)
    if va is not None:
        return Const(-va)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    va, vb = _const_value(a), _const_value(b)
    if va == 0 or vb == 0:
        return Const(0.0)
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return _neg(b)
    if vb == -1:
        return _neg(a)
    if va is not None and vb is not None:
        return Const(va * vb)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    va, vb = _const_value(a), _const_value(b)
    if va == 0 and vb != 0:
        return Const(0.0)
    if vb == 1:
        return a
    if va is not None and vb is not None and vb != 0:
        return Const(va / vb)
    return Div(a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    vb = _const_value(b)
    if vb == 1:
        return a
    if vb == 0:
        return Const(1.0)
    return Pow(a, b)


def _call(name: str, a: Expr) -> Expr:
    return Call(name, a)


def free_variables(node: Expr) -> frozenset[str]:
    """Names of the variables occurring in ``node``."""
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, (Neg, Call)):
        return free_variables(node.arg)
    if isinstance(node, Pow):
        return free_variables(node.base) | free_variables(node.exponent)
    return free_variables(node.left) | free_variables(node.right)


def _fold_constant(node: Expr) -> Expr:
    """Collapse a variable-free subtree to a single constant when it evaluates cleanly."""
    if isinstance(node, Const) or free_variables(node):
        return node
    try:
        folded = _fold(evaluate(node, {}))
    except DomainError:
        return node
    return folded if folded is not None else node


# ---------------------------------------------------------------------------
# Symbolic differentiation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def differentiate(node: Expr, var: str = "x") -> Expr:
    """Return the symbolic derivative of ``node`` with respect to ``var``.

    ``abs`` differentiates to ``sign``, which is undefined at 0; callers that
    need a derivative at a kink must use a one-sided numeric route.
    """
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if var not in free_variables(node):
        return Const(0.0)
    d = lambda n: differentiate(n, var)  # noqa: E731
    if isinstance(node, Add):
        return _add(d(node.left), d(node.right))
    if isinstance(node, Sub):
        return _sub(d(node.left), d(node.right))
    if isinstance(node, Neg):
        return _neg(d(node.arg))
    if isinstance(node, Mul):
        u, v = node.left, node.right
        return _add(_mul(d(u), v), _mul(u, d(v)))
    if isinstance(node, Div):
        u, v = node.left, node.right
        if var not in free_variables(v):
            return _div(d(u), v)
        return _div(_sub(_mul(d(u), v), _mul(u, d(v))), _pow(v, Const(2.0)))
    if isinstance(node, Pow):
        b, e = node.base, node.exponent
        if var not in free_variables(e):
            e = _fold_constant(e)
            return _mul(_mul(e, _pow(b, _fold_constant(_sub(e, Const(1.0))))), d(b))
        if var not in free_variables(b):
            return _mul(_mul(node, _call("ln", b)), d(e))
        # d(b^e) = b^e * (e' ln b + e b'/b)
        return _mul(node, _add(_mul(d(e), _call("ln", b)), _div(_mul(e, d(b)), b)))
    if isinstance(node, Call):
        u = node.arg
        du = d(u)
        name = node.name
        if name == "sqrt":
            outer = _div(Const(1.0), _mul(Const(2.0), node))
        elif name == "sin":
            outer = _call("cos", u)
        elif name == "cos":
            outer = _neg(_call("sin", u))
        elif name == "asin":
            outer = _div(Const(1.0), _call("sqrt", _sub(Const(1.0), _pow(u, Const(2.0)))))
        elif name == "acos":
            outer = _neg(_div(Const(1.0), _call("sqrt", _sub(Const(1.0), _pow(u, Const(2.0))))))
        elif name == "atan":
            outer = _div(Const(1.0), _add(Const(1.0), _pow(u, Const(2.0))))
        elif name == "exp":
            outer = node
        elif name == "ln":
            outer = _div(Const(1.0), u)
        elif name == "abs":
            outer = _call("sign", u)
        elif name == "sign":
            return Const(0.0)
        else:  # pragma: no cover - parser rejects unknown names
            raise ValueError(f"unknown function {name!r}")
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: Expr, var: str, replacement: Expr) -> Expr:
    """Replace every occurrence of variable ``var`` by ``replacement``."""
    if isinstance(node, Var):
        return replacement if node.name == var else node
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, var, replacement))
    if isinstance(node, Call):
        return Call(node.name, substitute(node.arg, var, replacement))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, var, replacement), substitute(node.exponent, var, replacement))
    return type(node)(substitute(node.left, var, replacement), substitute(node.right, var, replacement))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _literal_integer(node: Expr) -> int | None:
    v = _const_value(node)
    if v is not None and v.is_integer() and abs(v) <= 2**31:
        return int(v)
    return None


class _FloatOps:
    zero = 0.0
    one = 1.0
    sqrt = staticmethod(math.sqrt)
    sin = staticmethod(math.sin)
    cos = staticmethod(math.cos)
    asin = staticmethod(math.asin)
    acos = staticmethod(math.acos)
    atan = staticmethod(math.atan)
    exp = staticmethod(math.exp)
    ln = staticmethod(math.log)
    abs = staticmethod(abs)
    isfinite = staticmethod(math.isfinite)
    pow = staticmethod(math.pow)

    @staticmethod
    def const(v: float) -> float:
        return v


class _MpOps:
    zero = mpmath.mpf(0)
    one = mpmath.mpf(1)
    sqrt = staticmethod(mpmath.sqrt)
    sin = staticmethod(mpmath.sin)
    cos = staticmethod(mpmath.cos)
    asin = staticmethod(mpmath.asin)
    acos = staticmethod(mpmath.acos)
    atan = staticmethod(mpmath.atan)
    exp = staticmethod(mpmath.exp)
    ln = staticmethod(mpmath.log)
    abs = staticmethod(abs)
    isfinite = staticmethod(mpmath.isfinite)
    pow = staticmethod(mpmath.power)

    @staticmethod
    def const(v: float):
        # pi and e parse to doubles; recover the exact constants at high precision.
        if v == math.pi:
            return +mpmath.pi
        if v == math.e:
            return +mpmath.e
        return mpmath.mpf(v)


def _call_value(name: str, u, ops):
    if name == "sqrt":
        if u < 0:
            raise DomainError(f"sqrt of negative value {float(u):.6g}")
        return ops.sqrt(u)
    if name in ("asin", "acos"):
        if u < -1 or u > 1:
            raise DomainError(f"{name} argument {float(u):.6g} outside [-1, 1]")
        return getattr(ops, name)(u)
    if name == "ln":
        if u <= 0:
            raise DomainError(f"ln of non-positive value {float(u):.6g}")
        return ops.ln(u)
    if name == "abs":
        return ops.abs(u)
    if name == "sign":
        if u == 0:
            raise DomainError("sign is not differentiable-defined at 0")
        return ops.one if u > 0 else -ops.one
    try:
        return getattr(ops, name)(u)
    except (OverflowError, ValueError) as exc:
        raise DomainError(f"{name}({float(u):.6g}): {exc}") from None


def _eval(node: Expr, env: Mapping[str, object], ops):
    if isinstance(node, Const):
        return ops.const(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise DomainError(f"no value bound for variable {node.name!r}") from None
    if isinstance(node, Add):
        return _eval(node.left, env, ops) + _eval(node.right, env, ops)
    if isinstance(node, Sub):
        return _eval(node.left, env, ops) - _eval(node.right, env, ops)
    if isinstance(node, Mul):
        return _eval(node.left, env, ops) * _eval(node.right, env, ops)
    if isinstance(node, Div):
        num = _eval(node.left, env, ops)
        den = _eval(node.right, env, ops)
        if den == 0:
            raise DomainError("division by zero")
        return num / den
    if isinstance(node, Neg):
        return -_eval(node.arg, env, ops)
    if isinstance(node, Call):
        return _call_value(node.name, _eval(node.arg, env, ops), ops)
    if isinstance(node, Pow):
        b = _eval(node.base, env, ops)
        k = _literal_integer(node.exponent)
        if k is not None:
            if b == 0 and k < 0:
                raise DomainError("zero raised to a negative power")
            try:
                return b**k
            except OverflowError as exc:
                raise DomainError(str(exc)) from None
        e = _eval(node.exponent, env, ops)
        if b > 0:
            try:
                return ops.pow(b, e)
            except OverflowError as exc:
                raise DomainError(str(exc)) from None
        if b == 0:
            if e > 0:
                return ops.zero
            raise DomainError("zero raised to a non-positive power")
        raise DomainError(f"negative base {float(b):.6g} with non-integer exponent")
    raise TypeError(f"not an expression node: {node!r}")


def _env(x) -> Mapping[str, object]:
    return x if isinstance(x, Mapping) else {"x": x}


def evaluate(node: Expr, x: float | Mapping[str, float]) -> float:
    """Evaluate ``node`` in double precision.

    ``x`` is the value of ``x`` or a mapping from variable names to values.

    Raises:
        DomainError: If any step leaves the real domain or the result is not finite.
    """
    env = {k: float(v) for k, v in _env(x).items()}
    try:
        value = float(_eval(node, env, _FloatOps))
    except ZeroDivisionError:
        raise DomainError("division by zero") from None
    if not math.isfinite(value):
        raise DomainError(f"non-finite value {value}")
    return value


def evaluate_mp(node: Expr, x, dps: int = 50):
    """Evaluate ``node`` with mpmath at ``dps`` decimal digits; returns an ``mpf``."""
    with mpmath.workdps(dps):
        env = {k: mpmath.mpf(v) for k, v in _env(x).items()}
        value = _eval(node, env, _MpOps)
        if not mpmath.isfinite(value):
            raise DomainError(f"non-finite value {value}")
        return +value


# ---------------------------------------------------------------------------
# Function handles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RealFn:
    """An evaluable real function of one variable.

    Either backed by an expression tree (``expr``), in which case derivatives
    of any order come from :func:`differentiate`, or by a Python callable
    (``func``) with an optional explicit ``deriv``.
    """

    expr: Expr | None = None
    func: Callable[[float], float] | None = None
    deriv: "RealFn | None" = None
    mp_func: Callable | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)
    label: str = ""

    def __post_init__(self):
        if (self.expr is None) == (self.func is None):
            raise ValueError("RealFn needs exactly one of expr or func")

    @classmethod
    def from_expr(cls, source: str | Expr, domain: tuple[float, float] = (-math.inf, math.inf)) -> "RealFn":
        if isinstance(source, str):
            return cls(expr=parse(source), domain=domain, label=source)
        return cls(expr=source, domain=domain, label=to_text(source))

    @classmethod
    def from_callable(cls, func: Callable[[float], float], deriv: "RealFn | None" = None,
                      mp_func: Callable | None = None, label: str = "") -> "RealFn":
        return cls(func=func, deriv=deriv, mp_func=mp_func, label=label or getattr(func, "__name__", "f"))

    def __call__(self, x: float) -> float:
        if self.expr is not None:
            return evaluate(self.expr, x)
        try:
            value = float(self.func(x))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(str(exc)) from None
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value}")
        return value

    def eval_mp(self, x, dps: int = 50):
        """High-precision value; native callables without ``mp_func`` fall back to doubles."""
        if self.expr is not None:
            return evaluate_mp(self.expr, x, dps)
        if self.mp_func is not None:
            with mpmath.workdps(dps):
                return +self.mp_func(mpmath.mpf(x))
        return mpmath.mpf(self(float(x)))

    @property
    def has_derivative(self) -> bool:
        return self.expr is not None or self.deriv is not None

    def derivative(self, k: int = 1) -> "RealFn":
        """The ``k``-th derivative as a new handle.

        Raises:
            MissingDerivative: For callables lacking a derivative chain of depth ``k``.
        """
        if k < 0:
            raise ValueError("derivative order must be non-negative")
        fn = self
        for order in range(k):
            if fn.expr is not None:
                fn = RealFn(expr=differentiate(fn.expr), domain=fn.domain, label=f"d{order + 1}({self.label})")
            elif fn.deriv is not None:
                fn = fn.deriv
            else:
                raise MissingDerivative(f"no derivative of order {order + 1} for {self.label or 'function'}")
        return fn

    def __str__(self) -> str:
        return self.label or (to_text(self.expr) if self.expr is not None else "<native>")
