"""Expression language for radial initial-data profiles.

Data families are written as text in the radius r and sweep parameters
A, B, C, e.g. "A*r^2*cos(C*r)*exp(-r^2)". The grammar is deliberately
small: numeric literals; the four variables; unary minus; + - * / ^;
the functions exp, sin, cos, sqrt, cosh; and the smooth radial bracket
ang(x) = sqrt(1 + x^2). Precedence, loosest to tightest:

    + -   |   * /   |   unary -   |   ^ (right-associative)

Implicit multiplication is rejected ("2r" is a syntax error). The sampled
ground state Q never appears as a DSL symbol; families that
add or multiply Q carry that as a flag next to the expression pair.

Evaluation accepts a scalar radius or a full numpy array and runs at the
solver's precision (float64). Division by zero, even roots of negatives,
and non-finite intermediates raise positioned errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

VARIABLES = ("r", "A", "B", "C")
FUNCTIONS = ("exp", "sin", "cos", "sqrt", "cosh", "ang")

Number = Union[float, np.ndarray]


class DslError(ValueError):
    """Base for parse/eval errors; offset is a byte position in the source."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"at offset {offset}: {message}")
        self.offset = offset


class DslSyntaxError(DslError):
    pass


class DslNameError(DslError):
    pass


class DslEvalError(DslError):
    pass


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Node"
    rhs: "Node"
    pos: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"
    pos: int = field(compare=False, default=0)


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise DslSyntaxError(i, f"unexpected character {text[i]!r}")
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), i))
        i = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, want_text: str):
        kind, text, pos = self.peek()
        if text != want_text:
            got = repr(text) if kind != "eof" else "end of input"
            raise DslSyntaxError(pos, f"expected {want_text!r}, got {got}")
        return self.advance()

    # expr := term (('+'|'-') term)*
    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term(), pos=pos)
            else:
                return node

    # term := unary (('*'|'/') unary)*
    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary(), pos=pos)
            else:
                return node

    # unary := '-' unary | power
    def unary(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary(), pos=pos)
        return self.power()

    # power := atom ('^' unary)?   (right-associative, exponent may be signed)
    def power(self) -> Node:
        node = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", node, self.unary(), pos=pos)
        return node

    def atom(self) -> Node:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text), pos=pos)
        if kind == "ident":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise DslNameError(pos, f"unknown function {text!r} "
                                       f"(known: {', '.join(FUNCTIONS)})")
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos=pos)
            if text not in VARIABLES:
                raise DslNameError(pos, f"unknown identifier {text!r} "
                                   f"(variables: {', '.join(VARIABLES)})")
            return Var(text, pos=pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        got = repr(text) if kind != "eof" else "end of input"
        raise DslSyntaxError(pos, f"expected a number, identifier or '(', got {got}")

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise DslSyntaxError(pos, f"unexpected trailing input {text!r} "
                                 "(implicit multiplication is not supported)")
        return node


_FN_IMPL = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "cosh": np.cosh,
}


def _eval(node: Node, env: dict) -> Number:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.lhs, env)
        b = _eval(node.rhs, env)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            if np.any(b == 0):
                raise DslEvalError(node.pos, "division by zero")
            out = a / b
        else:  # ^
            with np.errstate(over="ignore", invalid="ignore"):
                out = a ** b
    else:  # Call
        a = _eval(node.arg, env)
        with np.errstate(over="ignore", invalid="ignore"):
            if node.fn == "sqrt":
                if np.any(np.asarray(a) < 0):
                    raise DslEvalError(node.pos, "square root of a negative value")
                out = np.sqrt(a)
            elif node.fn == "ang":
                out = np.sqrt(1.0 + np.asarray(a, dtype=float) ** 2)
            else:
                out = _FN_IMPL[node.fn](a)
    if not np.all(np.isfinite(out)):
        raise DslEvalError(node.pos, "non-finite result")
    return out


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _node_prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _to_text(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = _to_text(node.operand)
        if _node_prec(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.fn}({_to_text(node.arg)})"
    p = _PREC[node.op]
    lhs, rhs = _to_text(node.lhs), _to_text(node.rhs)
    if node.op == "^":
        if _node_prec(node.lhs) <= p:
            lhs = f"({lhs})"
        if _node_prec(node.rhs) < 3:  # unary minus is legal in the exponent
            rhs = f"({rhs})"
    else:
        if _node_prec(node.lhs) < p:
            lhs = f"({lhs})"
        if _node_prec(node.rhs) <= p:  # left-associative chain
            rhs = f"({rhs})"
    return f"{lhs}{node.op}{rhs}"


@dataclass(frozen=True)
class DataExpr:
    """Parsed, immutable radial-data expression."""

    ast: Node

    def evaluate(self, r: Number, A: float = 0.0, B: float = 0.0,
                 C: float = 0.0) -> Number:
        return _eval(self.ast, {"r": r, "A": A, "B": B, "C": C})

    def sample(self, r: np.ndarray, A: float = 0.0, B: float = 0.0,
               C: float = 0.0) -> np.ndarray:
        """Evaluate on a radius array, broadcasting r-free expressions."""
        out = self.evaluate(r, A=A, B=B, C=C)
        return np.broadcast_to(np.asarray(out, dtype=float), r.shape).copy()

    def __str__(self) -> str:
        return _to_text(self.ast)


def parse(text: str) -> DataExpr:
    """Parse an expression; raises DslSyntaxError/DslNameError with offsets."""
    return DataExpr(ast=_Parser(text).parse())


@dataclass(frozen=True)
class BuiltinFamily:
    """Expression pair for one of the section figures.

    add_q: u0 gains the sampled ground state additively (families through
    (Q + A f, B g)); mul_q: both components are multiplied pointwise by the
    sampled ground state (the (A Q, B Q) section).
    """

    name: str
    u0: DataExpr
    u1: DataExpr
    add_q: bool = False
    mul_q: bool = False
    uses_c: bool = False


_FAMILY_SPECS = {
    # (u0, u1, add_q, mul_q, uses_c)
    "fig1_1_left": ("A*exp(-r^2)", "B*exp(-r^2)", True, False, False),
    "fig1_1_right": ("A", "B", False, True, False),
    "fig1_2_left": ("A*exp(-r^2)", "B*exp(-r^2)", False, False, False),
    "fig1_2_right": ("A*r^2*exp(-4*(r^2-1)^2)", "B*r^2*exp(-(r^2-1))",
                     False, False, False),
    "fig1_3_left": ("A*exp(-ang(r))", "B*sin(6*r^2)*exp(-(r^2-1)^2/10)",
                    False, False, False),
    "fig1_3_right": ("A*r^2*cos(10*r^2)*exp(-ang(r^2))",
                     "B*sin(6*r^2)*exp(-4*(r^2-1)^2)", False, False, False),
    "fig1_4": ("A*exp(-r^2/ang(r))", "B*exp(-r^2)", False, False, False),
    # the exponent is read as exp(-(3/2)<r>)
    "fig1_6_left": ("A*r*sin(6*r)*exp(-(3/2)*ang(r))",
                    "B*cos(6*r)*exp(-(r^2-1/4)^2)", False, False, False),
    # non-planar section: the parameters couple inside the profiles
    "curve1": ("(A+B)*B*cos(2*(A-B)*r)*exp(-r^2/ang(r))", "(A-B)*exp(-r^2)",
               False, False, False),
    "3param": ("A*r^2*cos(C*r)*exp(-r^2)", "B*r^3*sin(6*r)*exp(-2*(r^2-1)^2)",
               False, False, True),
}

FAMILY_NAMES = tuple(_FAMILY_SPECS)
_FAMILY_CACHE: dict[str, BuiltinFamily] = {}


def builtin_family(name: str) -> BuiltinFamily:
    """Expression pair for a registered figure family."""
    if name not in _FAMILY_SPECS:
        raise KeyError(f"unknown family {name!r}; known: {', '.join(FAMILY_NAMES)}")
    if name not in _FAMILY_CACHE:
        u0, u1, add_q, mul_q, uses_c = _FAMILY_SPECS[name]
        _FAMILY_CACHE[name] = BuiltinFamily(
            name=name, u0=parse(u0), u1=parse(u1), add_q=add_q, mul_q=mul_q,
            uses_c=uses_c)
    return _FAMILY_CACHE[name]
