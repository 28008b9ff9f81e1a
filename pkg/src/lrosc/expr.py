"""Expression language for time functions M(t), omega(t), F(t).

Grammar (low to high precedence)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | "t" | ident "(" expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so
``-2^2 == -4`` and ``2^3^2 == 512``.  Angles are radians.  The only
variable is ``t``; model parameters are substituted as literals before
parsing (see :func:`substitute`).
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from typing import Callable, Mapping, Union

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "ExprEvaluationError",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprAst",
    "FUNCTIONS",
    "parse",
    "to_source",
    "TimeFunction",
    "TIME_FUNCTION_CATALOG",
    "substitute",
    "evaluate",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Raised by :func:`parse`.

    ``offset`` is a byte offset into the UTF-8 encoded source and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset(), source: str = ""):
        self.offset = offset
        self.expected = frozenset(expected)
        self.source = source
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += " (expected " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(detail)

    def caret(self) -> str:
        """Two-line diagnostic with a caret under the offending byte."""
        raw = self.source.encode("utf-8", errors="replace")
        prefix = raw[: self.offset].decode("utf-8", errors="replace")
        return f"{self.source}\n{' ' * len(prefix)}^"


class ExprEvaluationError(ExprError):
    """Domain error or non-finite result while evaluating."""


# AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Neg:
    operand: "ExprAst"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "ExprAst"


ExprAst = Union[Const, Var, Neg, BinOp, Call]

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}


# Tokenizer ---------------------------------------------------------------

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PUNCT = frozenset("+-*/^()")


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "ident", one of _PUNCT, or "end"
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch in " \t\r\n":
            pos += 1
            byte_pos += 1
            continue
        m = _NUMBER.match(source, pos)
        if m and ch not in string.ascii_letters:
            text = m.group()
            tokens.append(_Token("number", text, byte_pos))
        elif ch in _PUNCT:
            text = ch
            tokens.append(_Token(ch, ch, byte_pos))
        else:
            m = _IDENT.match(source, pos)
            if not m:
                raise ExprSyntaxError(
                    f"unexpected character {ch!r}",
                    byte_pos,
                    frozenset({"number", "t", "function", "(", "-"}),
                    source,
                )
            text = m.group()
            tokens.append(_Token("ident", text, byte_pos))
        pos += len(text)
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


# Parser ------------------------------------------------------------------

_ATOM_START = frozenset({"number", "t", "function", "("})


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message: str, expected: frozenset[str]):
        raise ExprSyntaxError(message, self.tok.offset, expected, self.source)

    def expect(self, kind: str) -> _Token:
        if self.tok.kind != kind:
            what = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            self.fail(f"unexpected {what}", frozenset({kind}))
        tok = self.tok
        self.i += 1
        return tok

    def parse(self) -> ExprAst:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}", frozenset({"+", "-", "*", "/", "^", "end"}))
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.tok.kind
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.factor()
        while self.tok.kind in ("*", "/"):
            op = self.tok.kind
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> ExprAst:
        if self.tok.kind == "-":
            self.i += 1
            return Neg(self.factor())
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        if self.tok.kind == "^":
            self.i += 1
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> ExprAst:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError("numeric literal out of range", tok.offset, frozenset(), self.source)
            return Const(value)
        if tok.kind == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.i += 1
            if tok.text == "t":
                return Var("t")
            if self.tok.kind != "(":
                raise ExprSyntaxError(
                    f"unknown variable {tok.text!r} (only 't' is allowed)",
                    tok.offset,
                    frozenset({"t"}),
                    self.source,
                )
            if tok.text not in FUNCTIONS:
                raise ExprSyntaxError(
                    f"unknown function {tok.text!r}",
                    tok.offset,
                    frozenset(FUNCTIONS),
                    self.source,
                )
            self.i += 1
            arg = self.expr()
            self.expect(")")
            return Call(tok.text, arg)
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        self.fail(f"unexpected {what}", _ATOM_START | {"-"})


def parse(source: Union[str, bytes]) -> ExprAst:
    """Parse ``source`` into an AST.

    Raises :class:`ExprSyntaxError` on any malformed input, including bytes
    that are not valid UTF-8.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError("invalid UTF-8", exc.start) from None
    try:
        return _Parser(source).parse()
    except RecursionError:
        raise ExprSyntaxError("expression nested too deeply", 0, frozenset(), source) from None


# Printer -----------------------------------------------------------------


def to_source(node: ExprAst) -> str:
    """Render ``node`` as source text that reparses to an equivalent tree."""
    if isinstance(node, Const):
        text = repr(node.value)
        if node.value < 0 or text.startswith("-"):
            return f"(-{repr(-node.value)})"
        return text
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# Evaluation --------------------------------------------------------------


def _pow(a: float, b: float) -> float:
    return math.pow(a, b)


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _pow,
}


def _emit(node: ExprAst) -> str:
    # Python source for the node; every name resolves in _NAMESPACE.
    if isinstance(node, Const):
        return f"({node.value!r})"
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"(-{_emit(node.operand)})"
    if isinstance(node, BinOp):
        left, right = _emit(node.left), _emit(node.right)
        if node.op == "^":
            return f"_pow({left}, {right})"
        return f"({left} {node.op} {right})"
    if isinstance(node, Call):
        return f"_{node.func}({_emit(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


_NAMESPACE = {"__builtins__": {}, "inf": math.inf, "nan": math.nan, "_pow": _pow, **{f"_{k}": v for k, v in FUNCTIONS.items()}}


def _compile(node: ExprAst) -> Callable[[float], float]:
    """Compile the tree into a single Python lambda (no eval of user text:
    the source is generated from the validated AST)."""
    try:
        return eval(f"lambda t: {_emit(node)}", dict(_NAMESPACE))
    except (RecursionError, MemoryError, SyntaxError):
        # very deep trees overflow the compiler; fall back to a closure tree
        return _compile_tree(node)


def _compile_tree(node: ExprAst) -> Callable[[float], float]:
    if isinstance(node, Const):
        value = node.value
        return lambda t: value
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        inner = _compile_tree(node.operand)
        return lambda t: -inner(t)
    if isinstance(node, BinOp):
        left, right, op = _compile_tree(node.left), _compile_tree(node.right), _BINARY[node.op]
        return lambda t: op(left(t), right(t))
    if isinstance(node, Call):
        arg, fn = _compile_tree(node.arg), FUNCTIONS[node.func]
        return lambda t: fn(arg(t))
    raise TypeError(f"not an expression node: {node!r}")


class TimeFunction:
    """A real function of ``t`` built from an expression or catalog template.

    Instances are immutable and may be shared between threads.
    """

    __slots__ = ("_ast", "_fn", "source", "label")

    def __init__(self, ast: ExprAst, source: str | None = None, label: str | None = None):
        self._ast = ast
        self._fn = _compile(ast)
        self.source = source if source is not None else to_source(ast)
        self.label = label or self.source

    @classmethod
    def from_expression(cls, source: str) -> "TimeFunction":
        return cls(parse(source), source=source)

    @classmethod
    def constant(cls, value: float) -> "TimeFunction":
        return cls(Const(float(value)) if value >= 0 else Neg(Const(-float(value))))

    @classmethod
    def from_catalog(cls, name: str, **params: float) -> "TimeFunction":
        try:
            template, required = TIME_FUNCTION_CATALOG[name]
        except KeyError:
            raise KeyError(f"unknown time-function catalog entry {name!r}") from None
        missing = [p for p in required if p not in params]
        if missing:
            raise KeyError(f"catalog entry {name!r} missing parameters: {', '.join(missing)}")
        source = substitute(template, {k: params[k] for k in required})
        label = f"{name}(" + ", ".join(f"{k}={params[k]!r}" for k in required) + ")"
        return cls(parse(source), source=source, label=label)

    @property
    def ast(self) -> ExprAst:
        return self._ast

    def __call__(self, t: float) -> float:
        try:
            value = self._fn(t)
        except ZeroDivisionError:
            raise ExprEvaluationError(f"division by zero in {self.label} at t={t!r}") from None
        except (ValueError, OverflowError) as exc:
            raise ExprEvaluationError(f"{exc} in {self.label} at t={t!r}") from None
        if not math.isfinite(value):
            raise ExprEvaluationError(f"non-finite value in {self.label} at t={t!r}")
        return value

    def __repr__(self) -> str:
        return f"TimeFunction({self.label!r})"


def evaluate(f: TimeFunction, t: float) -> float:
    return f(t)


_PARAM = re.compile(r"\{([A-Za-z_][A-Za-z_0-9]*)\}")


def substitute(template: str, params: Mapping[str, float]) -> str:
    """Replace ``{name}`` placeholders with exact float literals."""

    def repl(m: re.Match) -> str:
        value = float(params[m.group(1)])
        if not math.isfinite(value):
            raise ExprError(f"parameter {m.group(1)} is not finite")
        return f"({value!r})" if value >= 0 else f"(-{-value!r})"

    return _PARAM.sub(repl, template)


# name -> (template, required parameters)
TIME_FUNCTION_CATALOG: dict[str, tuple[str, tuple[str, ...]]] = {
    "pulsating-mass": (
        "{m0}*exp(2*({gamma}*t + {mu}*sin({nu}*t)))",
        ("m0", "gamma", "mu", "nu"),
    ),
    # Omega^2 + (1/sqrt(M)) d^2 sqrt(M)/dt^2 for the mass above
    "pulsating-omega-sq": (
        "{Omega}^2 + ({gamma} + {mu}*{nu}*cos({nu}*t))^2 - {mu}*{nu}^2*sin({nu}*t)",
        ("Omega", "gamma", "mu", "nu"),
    ),
    "constant": ("{value}", ("value",)),
}
