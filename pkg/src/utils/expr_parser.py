"""
Expression Parser
-----------------
Recursive-descent parser for rational expressions over a VarTable.

Grammar:
    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ("+"|"-")* atom ("^" uint)?
    atom   := uint | ident | "(" expr ")"

ExprCompiler reads the same grammar into a numeric evaluator that keeps
the grouping of the text.
"""

import cmath
import string
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Set

from src.models.ratfunc import RatFunc, VarTable, format_ratfunc
from src.utils.errors import (
    AlgebraError,
    ExponentError,
    ExprSyntaxError,
    NonFiniteError,
    PoleError,
    UndefinedExpressionError,
    UnknownIdentifierError,
)

NUMBER = 'number'
IDENT = 'identifier'
END = 'end of input'
OPERATORS = "+-*/^()"
DIGITS = frozenset(string.digits)
IDENT_START = frozenset(string.ascii_letters + "_")
IDENT_CHARS = IDENT_START | DIGITS


@dataclass(frozen=True)
class Token:
    kind: str       # NUMBER, IDENT, END or the operator character itself
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    """Split expression text into tokens, recording source positions."""
    tokens: List[Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in DIGITS:
            j = i
            while j < n and text[j] in DIGITS:
                j += 1
            tokens.append(Token(NUMBER, text[i:j], i))
            i = j
            continue
        if c in IDENT_START:
            j = i
            while j < n and text[j] in IDENT_CHARS:
                j += 1
            tokens.append(Token(IDENT, text[i:j], i))
            i = j
            continue
        if c in OPERATORS:
            tokens.append(Token(c, c, i))
            i += 1
            continue
        raise ExprSyntaxError(text, i, [NUMBER, IDENT, '(', 'operator'], c)
    tokens.append(Token(END, '', n))
    return tokens


class ExprParser:
    """Parses expression text into RatFunc values over a fixed VarTable."""

    def __init__(self, vars: VarTable):
        self.vars = vars
        self._text = ''
        self._tokens: List[Token] = []
        self._pos = 0

    def parse(self, text: str) -> RatFunc:
        self._text = text
        self._tokens = tokenize(text)
        self._pos = 0
        try:
            result = self._expr()
        except AlgebraError as exc:
            raise UndefinedExpressionError(self._peek().position, str(exc)) from exc
        token = self._peek()
        if token.kind != END:
            raise ExprSyntaxError(text, token.position, ['+', '-', '*', '/', END], token.text)
        return result

    # -- helpers ---------------------------------------------------------------

    def _number(self, text: str):
        return RatFunc.const(self.vars, int(text))

    def _variable(self, name: str):
        return RatFunc.var(self.vars, name)

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _fail(self, expected: List[str]):
        token = self._peek()
        raise ExprSyntaxError(self._text, token.position, expected, token.text or END)

    # -- grammar ---------------------------------------------------------------

    def _expr(self) -> RatFunc:
        value = self._term()
        while self._peek().kind in ('+', '-'):
            op = self._advance().kind
            rhs = self._term()
            value = value + rhs if op == '+' else value - rhs
        return value

    def _term(self) -> RatFunc:
        value = self._factor()
        while self._peek().kind in ('*', '/'):
            op = self._advance().kind
            rhs = self._factor()
            value = value * rhs if op == '*' else value / rhs
        return value

    def _factor(self) -> RatFunc:
        negate = False
        while self._peek().kind in ('+', '-'):
            if self._advance().kind == '-':
                negate = not negate
        value = self._atom()
        if self._peek().kind == '^':
            self._advance()
            token = self._peek()
            if token.kind != NUMBER:
                raise ExponentError(token.position, token.text or END)
            self._advance()
            value = value ** int(token.text)
        return -value if negate else value

    def _atom(self) -> RatFunc:
        token = self._peek()
        if token.kind == NUMBER:
            self._advance()
            return self._number(token.text)
        if token.kind == IDENT:
            self._advance()
            if token.text not in self.vars:
                raise UnknownIdentifierError(token.text, token.position)
            return self._variable(token.text)
        if token.kind == '(':
            self._advance()
            value = self._expr()
            if self._peek().kind != ')':
                self._fail([')', '+', '-', '*', '/'])
            self._advance()
            return value
        self._fail([NUMBER, IDENT, '('])

# -- numeric compilation -------------------------------------------------------

Evaluator = Callable[[Sequence[complex]], complex]


class _Node:
    """Numeric expression tree built by ExprCompiler, evaluated on a value vector."""

    __slots__ = ('fn',)

    def __init__(self, fn: Evaluator):
        self.fn = fn

    def __add__(self, other: '_Node') -> '_Node':
        a, b = self.fn, other.fn
        return _Node(lambda v: a(v) + b(v))

    def __sub__(self, other: '_Node') -> '_Node':
        a, b = self.fn, other.fn
        return _Node(lambda v: a(v) - b(v))

    def __mul__(self, other: '_Node') -> '_Node':
        a, b = self.fn, other.fn
        return _Node(lambda v: a(v) * b(v))

    def __truediv__(self, other: '_Node') -> '_Node':
        a, b = self.fn, other.fn
        return _Node(lambda v: a(v) / b(v))

    def __pow__(self, n: int) -> '_Node':
        a = self.fn
        return _Node(lambda v: a(v) ** n)

    def __neg__(self) -> '_Node':
        a = self.fn
        return _Node(lambda v: -a(v))


class NumericExpr:
    """Complex evaluator that follows the source text's own grouping.

    Factored forms such as y^2*(t - t*y + x*y^2)^2 are evaluated as written,
    without expanding the products first.
    """

    __slots__ = ('text', 'vars', '_fn', '_used')

    def __init__(self, text: str, vars: VarTable, fn: Evaluator, used: Sequence[str]):
        self.text = text
        self.vars = vars
        self._fn = fn
        self._used = tuple(used)

    def __call__(self, values: Sequence[complex]) -> complex:
        try:
            value = self._fn(values)
        except ZeroDivisionError:
            raise PoleError(self._named(values)) from None
        except OverflowError:
            raise NonFiniteError(self._named(values)) from None
        if not cmath.isfinite(value):
            raise NonFiniteError(self._named(values))
        return value

    def _named(self, values: Sequence[complex]) -> Dict[str, complex]:
        return {n: values[self.vars.index(n)] for n in self._used}


class ExprCompiler(ExprParser):
    """Same grammar as ExprParser, producing NumericExpr evaluators."""

    def __init__(self, vars: VarTable):
        super().__init__(vars)
        self._used: Set[str] = set()

    def parse(self, text: str) -> NumericExpr:
        self._used = set()
        node = super().parse(text)
        return NumericExpr(text, self.vars, node.fn, sorted(self._used, key=self.vars.index))

    def _number(self, text: str) -> _Node:
        c = complex(int(text))
        return _Node(lambda v: c)

    def _variable(self, name: str) -> _Node:
        self._used.add(name)
        i = self.vars.index(name)
        return _Node(lambda v: v[i])


def compile_expr(text: str, vars: VarTable) -> NumericExpr:
    return ExprCompiler(vars).parse(text)


def parse_expr(text: str, vars: VarTable) -> RatFunc:
    """Parse text into the rational function it denotes over vars."""
    return ExprParser(vars).parse(text)


def format_expr(f: RatFunc) -> str:
    return format_ratfunc(f)
