"""Parse, differentiate, print, and compile scalar expressions.

Small expression language used throughout the package to define vector
fields and forcing profiles: real literals, named variables, the four
arithmetic operations, unary minus, integer powers written with ^, and
calls of a fixed set of elementary functions. Trees are immutable; all
structural transformations return new trees.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, SepsplitError

__all__ = [
    "Num", "Var", "Neg", "BinOp", "Pow", "Call", "Expr",
    "FUNCTIONS", "parse", "evaluate", "differentiate",
    "to_string", "compile_fn", "free_variables",
]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int  # integer exponents only; general powers are out of scope


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Num | Var | Neg | BinOp | Pow | Call

# name -> (scalar implementation, numpy source fragment)
FUNCTIONS = {
    "sin": (math.sin, "np.sin"),
    "cos": (math.cos, "np.cos"),
    "tan": (math.tan, "np.tan"),
    "exp": (math.exp, "np.exp"),
    "log": (math.log, "np.log"),
    "sqrt": (math.sqrt, "np.sqrt"),
    "sinh": (math.sinh, "np.sinh"),
    "cosh": (math.cosh, "np.cosh"),
    "tanh": (math.tanh, "np.tanh"),
    "atan": (math.atan, "np.atan" if hasattr(np, "atan") else "np.arctan"),
    "abs": (math.fabs, "np.abs"),
}

_MAX_EXPONENT = 1000


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    """Recursive descent over the token list.

    Grammar (standard precedence, ^ binds tightest, exponents are
    integer literals, optionally signed and parenthesized):

        expr   := term  (('+'|'-') term)*
        term   := unary (('*'|'/') unary)*
        unary  := '-' unary | power
        power  := atom ['^' exponent]
        atom   := NUM | VAR | FN '(' expr ')' | '(' expr ')'
    """

    def __init__(self, source, variables):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text):
        kind, value, pos = self.peek()
        if kind != "op" or value != text:
            shown = value if kind != "end" else "end of input"
            raise ParseError(f"expected {text!r}, found {shown!r}", pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        # integer literal, optionally signed, optionally parenthesized;
        # a chained ^ folds right-associatively into a single integer
        kind, value, pos = self.peek()
        if kind == "op" and value == "(":
            self.advance()
            n = self.exponent()
            self.expect_op(")")
            return self._fold_chain(n)
        sign = 1
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
            kind, value, pos = self.peek()
        if kind != "num" or not value.isdigit():
            shown = value if kind != "end" else "end of input"
            raise ParseError(f"expected an integer exponent, found {shown!r}", pos)
        self.advance()
        return self._fold_chain(sign * int(value))

    def _fold_chain(self, n):
        kind, value, pos = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            m = self.exponent()
            if m < 0:
                raise ParseError("negative exponent in a power tower", pos)
            n = n**m
        if abs(n) > _MAX_EXPONENT:
            raise ParseError(f"exponent magnitude exceeds {_MAX_EXPONENT}", pos)
        return n

    def atom(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", pos)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if value in self.variables:
                return Var(value)
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} requires an argument list", pos)
            raise ParseError(f"unknown identifier {value!r}", pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        shown = value if kind != "end" else "end of input"
        raise ParseError(f"unexpected token {shown!r}", pos)


def parse(source, variables=("x",)):
    """Parse ``source`` into an expression tree.

    ``variables`` lists the identifiers allowed as variables; anything
    else raises ParseError with the byte offset of the offending token.
    """
    if not source.strip():
        raise ParseError("empty input", 0)
    return _Parser(source, variables).parse()


# ---------------------------------------------------------------------------
# evaluation

def evaluate(expr, bindings):
    """Evaluate ``expr`` at a point, raising DomainError on any domain
    violation (log/sqrt out of range, division by zero, overflow) instead
    of returning nan or inf."""
    v = _eval(expr, bindings)
    if not math.isfinite(v):
        raise DomainError(f"non-finite result {v!r}")
    return v


def _eval(expr, bindings):
    match expr:
        case Num(value):
            return value
        case Var(name):
            try:
                return float(bindings[name])
            except KeyError:
                raise SepsplitError(f"no binding for variable {name!r}") from None
        case Neg(arg):
            return -_eval(arg, bindings)
        case BinOp(op, left, right):
            a = _eval(left, bindings)
            b = _eval(right, bindings)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                try:
                    return a * b
                except OverflowError:
                    raise DomainError(f"overflow in {a!r} * {b!r}") from None
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        case Pow(base, exponent):
            a = _eval(base, bindings)
            if a == 0.0 and exponent < 0:
                raise DomainError("zero raised to a negative power")
            try:
                return float(a**exponent)
            except OverflowError:
                raise DomainError(f"overflow in {a!r}^{exponent}") from None
        case Call(fn, arg):
            a = _eval(arg, bindings)
            impl = FUNCTIONS[fn][0]
            try:
                return impl(a)
            except ValueError:
                raise DomainError(f"{fn} of out-of-domain value {a!r}") from None
            except OverflowError:
                raise DomainError(f"overflow in {fn}({a!r})") from None
    raise TypeError(f"not an expression node: {expr!r}")


def free_variables(expr):
    """Set of variable names appearing in the tree."""
    match expr:
        case Num():
            return set()
        case Var(name):
            return {name}
        case Neg(arg) | Call(_, arg) | Pow(arg, _):
            return free_variables(arg)
        case BinOp(_, left, right):
            return free_variables(left) | free_variables(right)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# smart constructors (light folding keeps derivative trees small)

def _fold(candidate):
    try:
        v = _eval(candidate, {})
    except (DomainError, OverflowError):
        return candidate
    if not math.isfinite(v):
        return candidate
    return Num(v)


def _is_const(expr):
    return isinstance(expr, Num) or (isinstance(expr, Neg) and _is_const(expr.arg))


def _num(expr):
    return _eval(expr, {})


def _neg(a):
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, Num):
        return Num(-a.value)
    return Neg(a)


def _add(a, b):
    if _is_const(a) and _num(a) == 0.0:
        return b
    if _is_const(b) and _num(b) == 0.0:
        return a
    if _is_const(a) and _is_const(b):
        return _fold(BinOp("+", a, b))
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_const(b) and _num(b) == 0.0:
        return a
    if _is_const(a) and _num(a) == 0.0:
        return _neg(b)
    if _is_const(a) and _is_const(b):
        return _fold(BinOp("-", a, b))
    return BinOp("-", a, b)


def _mul(a, b):
    for u, v in ((a, b), (b, a)):
        if _is_const(u):
            c = _num(u)
            if c == 0.0:
                return Num(0.0)
            if c == 1.0:
                return v
    if _is_const(a) and _is_const(b):
        return _fold(BinOp("*", a, b))
    return BinOp("*", a, b)


def _div(a, b):
    if _is_const(a) and _num(a) == 0.0:
        return Num(0.0)
    if _is_const(b) and _num(b) == 1.0:
        return a
    if _is_const(a) and _is_const(b):
        return _fold(BinOp("/", a, b))
    return BinOp("/", a, b)


def _pow(a, n):
    if n == 0:
        return Num(1.0)
    if n == 1:
        return a
    if _is_const(a):
        return _fold(Pow(a, n))
    return Pow(a, n)


# ---------------------------------------------------------------------------
# differentiation

def differentiate(expr, var):
    """Symbolic derivative with respect to ``var``. The result is a new
    tree; abs contributes u/abs(u), which correctly faults at u = 0."""
    match expr:
        case Num():
            return Num(0.0)
        case Var(name):
            return Num(1.0) if name == var else Num(0.0)
        case Neg(arg):
            return _neg(differentiate(arg, var))
        case BinOp("+", left, right):
            return _add(differentiate(left, var), differentiate(right, var))
        case BinOp("-", left, right):
            return _sub(differentiate(left, var), differentiate(right, var))
        case BinOp("*", left, right):
            return _add(
                _mul(differentiate(left, var), right),
                _mul(left, differentiate(right, var)),
            )
        case BinOp("/", left, right):
            num = _sub(
                _mul(differentiate(left, var), right),
                _mul(left, differentiate(right, var)),
            )
            return _div(num, _pow(right, 2))
        case Pow(base, n):
            return _mul(
                _mul(Num(float(n)), _pow(base, n - 1)),
                differentiate(base, var),
            )
        case Call(fn, u):
            du = differentiate(u, var)
            if fn == "sin":
                outer = Call("cos", u)
            elif fn == "cos":
                outer = _neg(Call("sin", u))
            elif fn == "tan":
                outer = _add(Num(1.0), _pow(Call("tan", u), 2))
            elif fn == "exp":
                outer = Call("exp", u)
            elif fn == "log":
                return _div(du, u)
            elif fn == "sqrt":
                return _div(du, _mul(Num(2.0), Call("sqrt", u)))
            elif fn == "sinh":
                outer = Call("cosh", u)
            elif fn == "cosh":
                outer = Call("sinh", u)
            elif fn == "tanh":
                outer = _sub(Num(1.0), _pow(Call("tanh", u), 2))
            elif fn == "atan":
                return _div(du, _add(Num(1.0), _pow(u, 2)))
            elif fn == "abs":
                outer = _div(u, Call("abs", u))
            else:
                raise TypeError(f"no derivative rule for {fn!r}")
            return _mul(outer, du)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# printing

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(expr):
    match expr:
        case Num(value):
            return _PREC_NEG if value < 0 else _PREC_ATOM
        case Var() | Call():
            return _PREC_ATOM
        case Neg():
            return _PREC_NEG
        case Pow():
            return _PREC_POW
        case BinOp(op, _, _):
            return _PREC_ADD if op in "+-" else _PREC_MUL
    raise TypeError(f"not an expression node: {expr!r}")


def _wrap(expr, minimum):
    s = to_string(expr)
    return f"({s})" if _prec(expr) < minimum else s


def to_string(expr):
    """Render with the fewest parentheses that preserve the tree shape:
    parse(to_string(e)) evaluates bit-identically to e."""
    match expr:
        case Num(value):
            return repr(value)
        case Var(name):
            return name
        case Neg(arg):
            return f"-{_wrap(arg, _PREC_NEG)}"
        case BinOp(op, left, right):
            p = _prec(expr)
            return f"{_wrap(left, p)} {op} {_wrap(right, p + 1)}"
        case Pow(base, n):
            e = str(n) if n >= 0 else f"(-{-n})"
            return f"{_wrap(base, _PREC_ATOM)}^{e}"
        case Call(fn, arg):
            return f"{fn}({to_string(arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# compilation

def _emit(expr, names, numpy_mode):
    match expr:
        case Num(value):
            return f"({value!r})"
        case Var(name):
            return names[name]
        case Neg(arg):
            return f"(-{_emit(arg, names, numpy_mode)})"
        case BinOp(op, left, right):
            a = _emit(left, names, numpy_mode)
            b = _emit(right, names, numpy_mode)
            return f"({a} {op} {b})"
        case Pow(base, n):
            return f"({_emit(base, names, numpy_mode)}**({n}))"
        case Call(fn, arg):
            a = _emit(arg, names, numpy_mode)
            if numpy_mode:
                return f"{FUNCTIONS[fn][1]}({a})"
            if fn == "abs":
                return f"abs({a})"
            return f"math.{fn}({a})"
    raise TypeError(f"not an expression node: {expr!r}")


def compile_fn(expr, variables, vectorized=True):
    """Compile to a fast positional callable over ``variables``.

    The vectorized form maps numpy arrays elementwise. Compiled code does
    no domain checking (use evaluate for the checked path); the hot loops
    that rely on it only ever see in-domain arguments.
    """
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    for v in variables:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", v):
            raise SepsplitError(f"invalid variable name {v!r}")
    body = _emit(expr, names, vectorized)
    src = f"lambda {', '.join(names[v] for v in variables)}: {body}"
    scope = {"np": np, "math": math, "abs": abs, "__builtins__": {}}
    return eval(src, scope)  # noqa: S307 - source is generated above
