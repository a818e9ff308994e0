"""
Painleve Model
--------------
Scalar second-order equations x'' = rhs(x, p, t) with p = x', Hamiltonians
quadratic in the momentum y, and the correspondence between classical
constants and auxiliary parameters.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from src.models.ratfunc import RatFunc, VarTable
from src.utils.errors import DegenerateHamiltonianError, PainleveError

PAINLEVE_VARS = VarTable([
    't', 'x', 'p', 'y',
    'alpha', 'beta', 'gamma', 'delta', 'a',
    'kappa0', 'kappa1', 'kappat', 'kappainf', 'eta0', 'etainf', 'eta', 'kappa',
])

CLASSICAL_CONSTANTS = ('alpha', 'beta', 'gamma', 'delta')


@dataclass(frozen=True, eq=False)
class ScalarODE:
    """x'' = rhs, with p standing for x'."""

    rhs: RatFunc
    name: str = ''
    position: str = 'x'
    velocity: str = 'p'
    timevar: str = 't'

    def __post_init__(self):
        for v in (self.position, self.velocity, self.timevar):
            if v not in self.rhs.vars:
                raise PainleveError(f"variable {v!r} is missing from {self.rhs.vars!r}")
        if 'y' in self.rhs.variables() and 'y' not in (self.position, self.velocity, self.timevar):
            raise PainleveError(f"scalar equation {self.name or self.rhs} still involves y")

    @property
    def parameters(self) -> Tuple[str, ...]:
        own = (self.position, self.velocity, self.timevar)
        return tuple(v for v in self.rhs.variables() if v not in own)

    def value(self, x: complex, p: complex, t: complex,
              params: Optional[Mapping[str, complex]] = None) -> complex:
        point = dict(params or {})
        point.update({self.position: x, self.velocity: p, self.timevar: t})
        return self.rhs.evaluate(point)

    def renamed(self, name: str) -> 'ScalarODE':
        return ScalarODE(self.rhs, name, self.position, self.velocity, self.timevar)

    def __str__(self) -> str:
        return f"{self.position}'' = {self.rhs}"


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """H = A y^2 + B y + C with A, B, C free of y."""

    A: RatFunc
    B: RatFunc
    C: RatFunc
    name: str = ''

    def __post_init__(self):
        for part, f in (('A', self.A), ('B', self.B), ('C', self.C)):
            used = f.variables()
            if 'y' in used or 'p' in used:
                raise PainleveError(f"coefficient {part} of {self.name or 'H'} must not involve y or p")
        if self.A.is_zero():
            raise DegenerateHamiltonianError(f"{self.name or 'H'} has no y^2 term")

    @classmethod
    def from_expr(cls, H: RatFunc, name: str = '') -> 'QuadraticHamiltonian':
        """Split H into A, B, C; H must be a polynomial of degree two in y."""
        if 'y' in H.den.variables():
            raise PainleveError(f"{name or 'H'}: y appears in a denominator")
        if H.num.degree_in('y') != 2:
            raise DegenerateHamiltonianError(f"{name or 'H'} is not quadratic in y")
        A = RatFunc(H.num.diff('y').diff('y'), H.den) / 2
        B = RatFunc(H.num.diff('y').at_zero('y'), H.den)
        C = RatFunc(H.num.at_zero('y'), H.den)
        return cls(A, B, C, name)

    @property
    def vars(self) -> VarTable:
        return self.A.vars

    @property
    def H(self) -> RatFunc:
        y = RatFunc.var(self.vars, 'y')
        return self.A * y * y + self.B * y + self.C

    def __str__(self) -> str:
        return f"H = ({self.A})*y^2 + ({self.B})*y + ({self.C})"


@dataclass(frozen=True, eq=False)
class ParamMap:
    """Classical constant -> expression in auxiliary parameters; None marks an absent entry."""

    entries: Mapping[str, Optional[RatFunc]] = field(default_factory=dict)
    aux_parameters: int = 0

    def assignment(self) -> Dict[str, RatFunc]:
        return {k: v for k, v in self.entries.items() if v is not None}

    def is_empty(self) -> bool:
        return not self.assignment()

    def describe(self) -> Dict[str, str]:
        return {k: ('none' if v is None else str(v)) for k, v in self.entries.items()}


@dataclass(frozen=True, eq=False)
class PainleveSystem:
    """One catalog row: scalar form, optional Hamiltonian and parameter map."""

    tag: str
    title: str
    ode: ScalarODE
    hamiltonian: Optional[QuadraticHamiltonian] = None
    params: Optional[ParamMap] = None
    root_type: Optional[str] = None
