"""
Rational Functions
------------------
Exact sparse multivariate polynomials and rational functions over Q.

Polynomials are dicts from exponent tuples to nonzero Fractions over a
shared VarTable. Rational functions are numerator/denominator pairs with
no GCD normalization; equality is decided by cross-multiplication. Known
factors (chart localizations) can be cancelled explicitly with RatFunc.cancel.
"""

from __future__ import annotations

import cmath
import heapq
import math
import re
from contextlib import contextmanager
from contextvars import ContextVar
from fractions import Fraction
from operator import add
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from src.utils.errors import (
    DegreeOverflowError,
    DivisionByZeroError,
    MissingValueError,
    NonFiniteError,
    NotPolynomialError,
    PoleError,
    SubstitutionPoleError,
    UnknownIdentifierError,
    VarTableMismatchError,
)

IDENT_RE = re.compile(r'[A-Za-z_][A-Za-z0-9_]*\Z')

DEFAULT_DEGREE_CAP = 512
_degree_cap: ContextVar[int] = ContextVar('degree_cap', default=DEFAULT_DEGREE_CAP)

Exponents = Tuple[int, ...]
Scalar = Union[int, Fraction]


def get_degree_cap() -> int:
    return _degree_cap.get()


def set_degree_cap(cap: int) -> None:
    """Set the total-degree cap for the current context."""
    if cap < 1:
        raise ValueError(f"degree cap must be positive, got {cap}")
    _degree_cap.set(cap)


@contextmanager
def degree_cap(cap: int):
    """Temporarily override the total-degree cap."""
    if cap < 1:
        raise ValueError(f"degree cap must be positive, got {cap}")
    token = _degree_cap.set(cap)
    try:
        yield cap
    finally:
        _degree_cap.reset(token)


class VarTable:
    """Ordered table of distinct variable names."""

    __slots__ = ('names', '_index')

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        for name in names:
            if not isinstance(name, str) or not IDENT_RE.match(name):
                raise ValueError(f"invalid variable name {name!r}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.names = names
        self._index = {name: i for i, name in enumerate(names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownIdentifierError(name) from None

    def extend(self, names: Iterable[str]) -> 'VarTable':
        extra = [n for n in names if n not in self._index]
        return VarTable(self.names + tuple(extra))

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __getitem__(self, i: int) -> str:
        return self.names[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarTable) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"VarTable({', '.join(self.names)})"


def _same_table(a: VarTable, b: VarTable) -> None:
    if a is not b and a != b:
        raise VarTableMismatchError(f"{a!r} vs {b!r}")


def _grlex_key(item: Tuple[Exponents, Fraction]):
    exps = item[0]
    return (sum(exps), exps)


# -- numeric evaluation plans --------------------------------------------------
#
# A plan is either a complex constant or (var_index, [(exponent, subplan), ...])
# with exponents in decreasing order; evaluation is sparse Horner in that
# variable with the subplans as coefficients.

def _build_plan(items: List[Tuple[Exponents, complex]]):
    if not items:
        return 0j
    occurring = [i for i in range(len(items[0][0])) if any(e[i] for e, _ in items)]
    if not occurring:
        return complex(sum(c for _, c in items))
    # branch on the variable with the highest degree first
    v = max(occurring, key=lambda i: max(e[i] for e, _ in items))
    groups: Dict[int, List[Tuple[Exponents, complex]]] = {}
    for exps, c in items:
        reduced = exps[:v] + (0,) + exps[v + 1:]
        groups.setdefault(exps[v], []).append((reduced, c))
    return (v, [(k, _build_plan(groups[k])) for k in sorted(groups, reverse=True)])


def _run_plan(plan, values: Sequence[complex]) -> complex:
    if not isinstance(plan, tuple):
        return plan
    v, groups = plan
    z = values[v]
    acc = 0j
    prev = None
    for exp, sub in groups:
        if prev is not None:
            acc = acc * z ** (prev - exp)
        acc = acc + _run_plan(sub, values)
        prev = exp
    return acc * z ** prev


class Poly:
    """Sparse polynomial with Fraction coefficients."""

    __slots__ = ('vars', 'terms', '_plan')

    def __init__(self, vars: VarTable, terms: Optional[Mapping[Exponents, Scalar]] = None,
                 _trusted: bool = False):
        self.vars = vars
        self._plan = None   # numeric evaluation plan, built on first use
        if _trusted:
            self.terms = terms
            return
        clean: Dict[Exponents, Fraction] = {}
        n = len(vars)
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != n or any((not isinstance(e, int)) or e < 0 for e in exps):
                raise ValueError(f"bad exponent sequence {exps} for {vars!r}")
            c = Fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self.terms = clean

    # -- constructors ----------------------------------------------------------

    @classmethod
    def zero(cls, vars: VarTable) -> 'Poly':
        return cls(vars, {}, _trusted=True)

    @classmethod
    def const(cls, vars: VarTable, c: Scalar) -> 'Poly':
        c = Fraction(c)
        if not c:
            return cls.zero(vars)
        return cls(vars, {(0,) * len(vars): c}, _trusted=True)

    @classmethod
    def one(cls, vars: VarTable) -> 'Poly':
        return cls.const(vars, 1)

    @classmethod
    def var(cls, vars: VarTable, name: str) -> 'Poly':
        i = vars.index(name)
        exps = tuple(1 if j == i else 0 for j in range(len(vars)))
        return cls(vars, {exps: Fraction(1)}, _trusted=True)

    @classmethod
    def monomial(cls, vars: VarTable, exps: Sequence[int], c: Scalar = 1) -> 'Poly':
        return cls(vars, {tuple(exps): c})

    # -- queries ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise NotPolynomialError(f"{self} is not a constant")
        return next(iter(self.terms.values()), Fraction(0))

    def is_one(self) -> bool:
        return self.is_constant() and self.constant_value() == 1

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        i = self.vars.index(name)
        return max((e[i] for e in self.terms), default=-1)

    def max_exponents(self) -> Exponents:
        n = len(self.vars)
        if not self.terms:
            return (0,) * n
        return tuple(max(e[i] for e in self.terms) for i in range(n))

    def min_exponents(self) -> Exponents:
        n = len(self.vars)
        if not self.terms:
            return (0,) * n
        return tuple(min(e[i] for e in self.terms) for i in range(n))

    def variables(self) -> Tuple[str, ...]:
        """Names of the variables that occur with a positive exponent."""
        top = self.max_exponents()
        return tuple(name for name, e in zip(self.vars.names, top) if e)

    def sorted_terms(self) -> List[Tuple[Exponents, Fraction]]:
        """Terms in descending graded lexicographic order."""
        return sorted(self.terms.items(), key=_grlex_key, reverse=True)

    def leading_coefficient(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return max(self.terms.items(), key=_grlex_key)[1]

    def __len__(self) -> int:
        return len(self.terms)

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> 'Poly':
        if isinstance(other, Poly):
            _same_table(self.vars, other.vars)
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.vars, other)
        return NotImplemented

    def __add__(self, other) -> 'Poly':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for exps, c in small.items():
            s = out.get(exps)
            if s is None:
                out[exps] = c
            else:
                s += c
                if s:
                    out[exps] = s
                else:
                    del out[exps]
        return Poly(self.vars, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> 'Poly':
        return Poly(self.vars, {e: -c for e, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other) -> 'Poly':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> 'Poly':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def scale(self, c: Scalar) -> 'Poly':
        c = Fraction(c)
        if not c:
            return Poly.zero(self.vars)
        return Poly(self.vars, {e: v * c for e, v in self.terms.items()}, _trusted=True)

    def __mul__(self, other) -> 'Poly':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.terms or not other.terms:
            return Poly.zero(self.vars)
        degree = self.total_degree() + other.total_degree()
        cap = get_degree_cap()
        if degree > cap:
            raise DegreeOverflowError(degree, cap)
        if len(self.terms) == 1 or len(other.terms) == 1:
            (mono, c), poly = (
                (next(iter(self.terms.items())), other) if len(self.terms) == 1
                else (next(iter(other.terms.items())), self)
            )
            return Poly(
                self.vars,
                {tuple(map(add, mono, e)): c * v for e, v in poly.terms.items()},
                _trusted=True,
            )
        # integer products over a common denominator per operand
        la = math.lcm(*(c.denominator for c in self.terms.values()))
        lb = math.lcm(*(c.denominator for c in other.terms.values()))
        ia = [(e, c.numerator * (la // c.denominator)) for e, c in self.terms.items()]
        ib = [(e, c.numerator * (lb // c.denominator)) for e, c in other.terms.items()]
        acc: Dict[Exponents, int] = {}
        get = acc.get
        for ea, ca in ia:
            for eb, cb in ib:
                key = tuple(map(add, ea, eb))
                acc[key] = get(key, 0) + ca * cb
        scale = la * lb
        return Poly(
            self.vars,
            {e: Fraction(c, scale) for e, c in acc.items() if c},
            _trusted=True,
        )

    __rmul__ = __mul__

    def __pow__(self, k: int) -> 'Poly':
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"polynomial exponent must be a nonnegative integer, got {k!r}")
        if k == 0:
            return Poly.one(self.vars)
        if self.terms:
            cap = get_degree_cap()
            if self.total_degree() * k > cap:
                raise DegreeOverflowError(self.total_degree() * k, cap)
        result = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def shift_down(self, exps: Exponents) -> 'Poly':
        """Divide by the monomial with the given exponents (must divide every term)."""
        return Poly(
            self.vars,
            {tuple(a - b for a, b in zip(e, exps)): c for e, c in self.terms.items()},
            _trusted=True,
        )

    def exact_div(self, divisor: 'Poly') -> Optional['Poly']:
        """Quotient self / divisor when the division leaves no remainder, else None."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise DivisionByZeroError(f"division of {self} by the zero polynomial")
        if not self.terms:
            return Poly.zero(self.vars)
        if divisor.is_constant():
            return self.scale(1 / divisor.constant_value())
        if self.total_degree() < divisor.total_degree():
            return None
        lead_e, lead_c = max(divisor.terms.items(), key=_grlex_key)
        tail = [(e, c) for e, c in divisor.terms.items() if e != lead_e]
        rem = dict(self.terms)
        # min-heap over negated grlex keys pops the leading remainder term first
        heap = [(-sum(e), tuple(-x for x in e)) for e in rem]
        heapq.heapify(heap)
        quotient: Dict[Exponents, Fraction] = {}
        while heap:
            _, neg = heapq.heappop(heap)
            e = tuple(-x for x in neg)
            c = rem.pop(e, None)
            if c is None:
                continue
            q_e = tuple(a - b for a, b in zip(e, lead_e))
            if min(q_e) < 0:
                return None
            q_c = c / lead_c
            quotient[q_e] = q_c
            for te, tc in tail:
                k = tuple(map(add, q_e, te))
                s = rem.get(k)
                if s is None:
                    rem[k] = -q_c * tc
                    heapq.heappush(heap, (-sum(k), tuple(-x for x in k)))
                else:
                    s -= q_c * tc
                    if s:
                        rem[k] = s
                    else:
                        del rem[k]
        return Poly(self.vars, quotient, _trusted=True)

    # -- calculus --------------------------------------------------------------

    def diff(self, name: str) -> 'Poly':
        i = self.vars.index(name)
        out: Dict[Exponents, Fraction] = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
        return Poly(self.vars, out, _trusted=True)

    def antiderivative(self, name: str) -> 'Poly':
        """Term-by-term antiderivative in one variable, vanishing where that variable is 0."""
        i = self.vars.index(name)
        out: Dict[Exponents, Fraction] = {}
        for e, c in self.terms.items():
            k = e[i]
            out[e[:i] + (k + 1,) + e[i + 1:]] = c / (k + 1)
        return Poly(self.vars, out, _trusted=True)

    def at_zero(self, name: str) -> 'Poly':
        """Restriction to the hyperplane name = 0."""
        i = self.vars.index(name)
        return Poly(self.vars, {e: c for e, c in self.terms.items() if not e[i]}, _trusted=True)

    def rebase(self, vars: VarTable, rename: Optional[Mapping[str, str]] = None) -> 'Poly':
        """The same polynomial over another table, optionally renaming variables."""
        rename = rename or {}
        used = [i for i, k in enumerate(self.max_exponents()) if k] if self.terms else []
        target = {i: vars.index(rename.get(self.vars[i], self.vars[i])) for i in used}
        if len(set(target.values())) != len(target):
            raise VarTableMismatchError("renaming merges two variables")
        out: Dict[Exponents, Fraction] = {}
        for e, c in self.terms.items():
            exps = [0] * len(vars)
            for i in used:
                exps[target[i]] = e[i]
            out[tuple(exps)] = c
        return Poly(vars, out, _trusted=True)

    # -- numeric ---------------------------------------------------------------

    def evaluate(self, values: Sequence[complex]) -> complex:
        """Sparse Horner evaluation; values are indexed like the VarTable."""
        if self._plan is None:
            self._plan = _build_plan([(e, complex(c)) for e, c in self.terms.items()])
        return _run_plan(self._plan, values)

    # -- comparison and printing -----------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.vars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.vars, frozenset(self.terms.items())))

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)})"


def _format_monomial(vars: VarTable, exps: Exponents) -> str:
    parts = []
    for name, e in zip(vars.names, exps):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def format_poly(p: Poly) -> str:
    """Canonical text form in descending grlex order, re-parseable by parse_expr."""
    if not p.terms:
        return "0"
    out = []
    for k, (exps, c) in enumerate(p.sorted_terms()):
        mono = _format_monomial(p.vars, exps)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if k == 0:
            out.append(f"-{body}" if c < 0 else body)
        else:
            out.append(f" - {body}" if c < 0 else f" + {body}")
    return "".join(out)


class RatFunc:
    """Quotient of two polynomials over the same VarTable.

    Construction cancels the largest common monomial factor and scales the
    denominator to leading coefficient 1. No other normalization happens.
    """

    __slots__ = ('num', 'den')

    def __init__(self, num: Poly, den: Optional[Poly] = None):
        if den is None:
            den = Poly.one(num.vars)
        _same_table(num.vars, den.vars)
        if den.is_zero():
            raise DivisionByZeroError("rational function with zero denominator")
        if num.is_zero():
            self.num = num
            self.den = Poly.one(num.vars)
            return
        if not den.is_constant():
            common = tuple(map(min, num.min_exponents(), den.min_exponents()))
            if any(common):
                num = num.shift_down(common)
                den = den.shift_down(common)
        lc = den.leading_coefficient()
        if lc != 1:
            inv = 1 / lc
            num = num.scale(inv)
            den = den.scale(inv)
        self.num = num
        self.den = den

    # -- constructors ----------------------------------------------------------

    @classmethod
    def const(cls, vars: VarTable, c: Scalar) -> 'RatFunc':
        return cls(Poly.const(vars, c))

    @classmethod
    def zero(cls, vars: VarTable) -> 'RatFunc':
        return cls(Poly.zero(vars))

    @classmethod
    def one(cls, vars: VarTable) -> 'RatFunc':
        return cls(Poly.one(vars))

    @classmethod
    def var(cls, vars: VarTable, name: str) -> 'RatFunc':
        return cls(Poly.var(vars, name))

    @property
    def vars(self) -> VarTable:
        return self.num.vars

    # -- queries ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> Poly:
        if not self.den.is_constant():
            raise NotPolynomialError(f"{self} has a non-constant denominator")
        return self.num.scale(1 / self.den.constant_value())

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def variables(self) -> Tuple[str, ...]:
        used = set(self.num.variables()) | set(self.den.variables())
        return tuple(n for n in self.vars.names if n in used)

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> 'RatFunc':
        if isinstance(other, RatFunc):
            _same_table(self.vars, other.vars)
            return other
        if isinstance(other, Poly):
            _same_table(self.vars, other.vars)
            return RatFunc(other)
        if isinstance(other, (int, Fraction)):
            return RatFunc.const(self.vars, other)
        return NotImplemented

    def __add__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> 'RatFunc':
        return RatFunc(-self.num, self.den)

    def __sub__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return RatFunc(self.num - other.num, self.den)
        return RatFunc(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return RatFunc.zero(self.vars)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise DivisionByZeroError(f"division of {self} by zero")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> 'RatFunc':
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k: int) -> 'RatFunc':
        if not isinstance(k, int):
            raise ValueError(f"exponent must be an integer, got {k!r}")
        if k < 0:
            if self.is_zero():
                raise DivisionByZeroError("negative power of zero")
            return RatFunc(self.den ** -k, self.num ** -k)
        return RatFunc(self.num ** k, self.den ** k)

    def equals(self, other) -> bool:
        """Semantic equality by cross-multiplication."""
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (RatFunc, Poly, int, Fraction)):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def cancel(self, factors: Iterable[Poly]) -> 'RatFunc':
        """Divide numerator and denominator by each given factor as often as both allow."""
        num, den = self.num, self.den
        if num.is_zero() or den.is_constant():
            return self
        for factor in factors:
            if factor.is_constant():
                continue
            while True:
                n = num.exact_div(factor)
                if n is None:
                    break
                d = den.exact_div(factor)
                if d is None:
                    break
                num, den = n, d
        if num is self.num:
            return self
        return RatFunc(num, den)

    # -- calculus --------------------------------------------------------------

    def diff(self, name: str) -> 'RatFunc':
        dn = self.num.diff(name)
        dd = self.den.diff(name)
        if dd.is_zero():
            return RatFunc(dn, self.den)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def subst(self, assignment: Mapping[str, 'RatFunc']) -> 'RatFunc':
        """Simultaneous substitution of variables by rational functions.

        Unassigned variables pass through. Numerator and denominator are
        expanded over one shared denominator, which then cancels.
        """
        images: Dict[int, RatFunc] = {}
        for name, image in assignment.items():
            i = self.vars.index(name)
            if not isinstance(image, RatFunc):
                image = RatFunc(image) if isinstance(image, Poly) else RatFunc.const(self.vars, image)
            _same_table(self.vars, image.vars)
            images[i] = image
        if not images or self.is_zero():
            return self
        top = tuple(map(max, self.num.max_exponents(), self.den.max_exponents()))
        images = {i: img for i, img in images.items() if top[i]}
        if not images:
            return self
        powers = _PowerCache(images)
        num = _subst_poly(self.num, images, top, powers)
        den = _subst_poly(self.den, images, top, powers)
        if den.is_zero():
            raise SubstitutionPoleError(
                f"substitution makes the denominator of {self} vanish identically"
            )
        return RatFunc(num, den)

    def rebase(self, vars: VarTable, rename: Optional[Mapping[str, str]] = None) -> 'RatFunc':
        return RatFunc(self.num.rebase(vars, rename), self.den.rebase(vars, rename))

    # -- numeric ---------------------------------------------------------------

    def evaluate(self, point: Mapping[str, complex]) -> complex:
        """Evaluate at a point given by variable name."""
        return NumericRatFunc(self)(_point_values(self, point))

    def __str__(self) -> str:
        return format_ratfunc(self)

    def __repr__(self) -> str:
        return f"RatFunc({format_ratfunc(self)})"


class _PowerCache:
    """Cached powers of substitution images' numerators and denominators."""

    def __init__(self, images: Mapping[int, RatFunc]):
        self.images = images
        self._num: Dict[Tuple[int, int], Poly] = {}
        self._den: Dict[Tuple[int, int], Poly] = {}

    def num(self, i: int, k: int) -> Poly:
        return self._power(self._num, self.images[i].num, i, k)

    def den(self, i: int, k: int) -> Poly:
        return self._power(self._den, self.images[i].den, i, k)

    @staticmethod
    def _power(cache: Dict[Tuple[int, int], Poly], base: Poly, i: int, k: int) -> Poly:
        hit = cache.get((i, k))
        if hit is not None:
            return hit
        if k == 1:
            value = base
        elif (i, k - 1) in cache:
            value = cache[(i, k - 1)] * base
        else:
            value = base ** k
        cache[(i, k)] = value
        return value


def _subst_poly(p: Poly, images: Mapping[int, RatFunc], top: Exponents,
                powers: _PowerCache) -> Poly:
    """Numerator of p after substitution over the denominator prod(den_i^top_i)."""
    vars = p.vars
    # group terms by their exponents in the substituted variables
    groups: Dict[Tuple[int, ...], Dict[Exponents, Fraction]] = {}
    slots = sorted(images)
    for exps, c in p.terms.items():
        key = tuple(exps[i] for i in slots)
        rest = list(exps)
        for i in slots:
            rest[i] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    acc: Dict[Exponents, Fraction] = {}
    for key, rest_terms in groups.items():
        factors = [Poly(vars, rest_terms, _trusted=True)]
        for i, e in zip(slots, key):
            if e:
                factors.append(powers.num(i, e))
            if top[i] - e and not images[i].den.is_one():
                factors.append(powers.den(i, top[i] - e))
        factors.sort(key=len)
        term = factors[0]
        for f in factors[1:]:
            term = term * f
        for e, c in term.terms.items():
            s = acc.get(e)
            if s is None:
                acc[e] = c
            else:
                s += c
                if s:
                    acc[e] = s
                else:
                    del acc[e]
    return Poly(vars, acc, _trusted=True)


def format_ratfunc(f: RatFunc) -> str:
    """Canonical printed form; parse_expr on the result gives back an equal function."""
    num = format_poly(f.num)
    if f.den.is_one():
        return num
    den = format_poly(f.den)
    if len(f.num) > 1:
        num = f"({num})"
    if len(f.den) > 1 or f.den.leading_coefficient() != 1 or '*' in den:
        den = f"({den})"
    return f"{num}/{den}"


class NumericRatFunc:
    """Complex-valued evaluator for a RatFunc, taking values in VarTable order."""

    __slots__ = ('source', '_used')

    def __init__(self, f: RatFunc):
        self.source = f
        self._used = f.variables()

    def __call__(self, values: Sequence[complex]) -> complex:
        f = self.source
        try:
            den = f.den.evaluate(values)
            if den == 0:
                raise PoleError(self._named(values))
            value = f.num.evaluate(values) / den
        except (OverflowError, ZeroDivisionError):
            raise NonFiniteError(self._named(values)) from None
        if not cmath.isfinite(value):
            raise NonFiniteError(self._named(values))
        return value

    def _named(self, values: Sequence[complex]) -> Dict[str, complex]:
        index = self.source.vars.index
        return {n: values[index(n)] for n in self._used}


def compile_ratfunc(f: RatFunc) -> NumericRatFunc:
    return NumericRatFunc(f)


def _point_values(f: RatFunc, point: Mapping[str, complex]) -> List[complex]:
    values: List[complex] = [0j] * len(f.vars)
    for name in f.variables():
        if name not in point:
            raise MissingValueError(name)
        values[f.vars.index(name)] = complex(point[name])
    return values


# -- operation-level entry points ----------------------------------------------

def rf_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    """Field arithmetic; op is one of add, sub, mul, div."""
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def rf_diff(f: RatFunc, v: str) -> RatFunc:
    return f.diff(v)


def rf_subst(f: RatFunc, assignment: Mapping[str, RatFunc]) -> RatFunc:
    return f.subst(assignment)


def rf_is_zero(f: RatFunc) -> bool:
    return f.is_zero()


def rf_equal(a: RatFunc, b: RatFunc) -> bool:
    return a.equals(b)


def rf_eval(f: RatFunc, point: Mapping[str, complex]) -> complex:
    return f.evaluate(point)
