"""
Painleve Controller
-------------------
Catalog access for the classical Painleve equations, elimination of the
momentum from Hamiltonian and chart systems, comparison of scalar forms
under parameter maps, and the rescalings and specialisations linking the
normalised P_III forms.
"""

from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import orjson
from loguru import logger

from src.controllers.atlas_controller import builtin_atlas
from src.controllers.kodaira_spencer import ode_system
from src.models.atlas import Atlas
from src.models.painleve import (
    PAINLEVE_VARS,
    ParamMap,
    PainleveSystem,
    QuadraticHamiltonian,
    ScalarODE,
)
from src.models.ratfunc import Poly, RatFunc, VarTable
from src.models.report import CheckResult, VerificationReport
from src.utils.atlas_dsl import BUILTIN_DIR
from src.utils.errors import AtlasError, NotAffineError, PainleveError, UnknownSystemError
from src.utils.expr_parser import parse_expr

TABLES_FILE = BUILTIN_DIR / 'painleve_tables.json'
CLASSICAL_TAGS = ('I', 'II', 'III', 'IV', 'V', 'VI')

Value = Union[RatFunc, Fraction, int, str]


@lru_cache(maxsize=None)
def load_tables() -> Dict[str, object]:
    data = orjson.loads(TABLES_FILE.read_bytes())
    if tuple(data['variables']) != PAINLEVE_VARS.names:
        raise PainleveError(f"{TABLES_FILE.name} declares variables {data['variables']}")
    return data


def _parse(text: str, where: Optional[Mapping[str, RatFunc]] = None) -> RatFunc:
    f = parse_expr(text, PAINLEVE_VARS)
    return f.subst(where) if where else f


def normalize_tag(tag: str) -> str:
    key = tag.strip().upper().replace('-', '_')
    if key.startswith('P_'):
        key = key[2:]
    elif key.startswith('P') and key[1:] in CLASSICAL_TAGS:
        key = key[1:]
    return key.replace('^', '_')


def system_tags() -> List[str]:
    return list(load_tables()['systems'])


def system(tag: str) -> PainleveSystem:
    """The catalog row for a tag such as II, P_III or III_D8."""
    key = normalize_tag(tag)
    rows = load_tables()['systems']
    if key not in rows:
        raise UnknownSystemError(f"unknown Painleve system {tag!r}; known systems are {', '.join(rows)}")
    return _build_system(key)


@lru_cache(maxsize=None)
def _build_system(key: str) -> PainleveSystem:
    row = load_tables()['systems'][key]
    where = {k: _parse(v) for k, v in row.get('where', {}).items()}
    ode = ScalarODE(_parse(row['ode']), name=row['title'])
    hamiltonian = None
    if row.get('hamiltonian'):
        h = row['hamiltonian']
        hamiltonian = QuadraticHamiltonian(
            _parse(h['A'], where), _parse(h['B'], where), _parse(h['C'], where), name=f"H_{key}"
        )
    params = None
    if 'params' in row:
        params = ParamMap(
            {k: (None if v is None else _parse(v)) for k, v in row['params'].items()},
            row.get('aux_parameters', 0),
        )
    return PainleveSystem(key, row['title'], ode, hamiltonian, params, row.get('root_type'))


def builtin_system(tag: str) -> Tuple[Optional[QuadraticHamiltonian], ScalarODE, Optional[ParamMap]]:
    s = system(tag)
    return s.hamiltonian, s.ode, s.params


def eliminate_system(dx: RatFunc, dy: RatFunc, coordinates: Tuple[str, str], keep: str,
                     timevar: str = 't', target: VarTable = PAINLEVE_VARS,
                     name: str = '') -> ScalarODE:
    """Second-order equation for the kept coordinate of a planar system.

    The kept equation must be affine in the other coordinate, so that it can
    be solved for it in terms of p = (kept)'. The result is written over
    target with the kept coordinate renamed to x.
    """
    x_name, y_name = coordinates
    if keep not in coordinates:
        raise PainleveError(f"{keep!r} is not one of the coordinates {coordinates}")
    if 'p' in coordinates:
        raise PainleveError("p is reserved for the velocity of the kept coordinate")
    other = y_name if keep == x_name else x_name
    f, g = (dx, dy) if keep == x_name else (dy, dx)
    if 'p' in f.variables() or 'p' in g.variables():
        raise PainleveError("the system already involves p")
    ext = f.vars if 'p' in f.vars else f.vars.extend(['p'])
    f, g = f.rebase(ext), g.rebase(ext)

    if other in f.den.variables() or f.num.degree_in(other) > 1:
        raise NotAffineError(f"d{keep}/d{timevar} is not affine in {other}")
    slope = RatFunc(f.num.diff(other), f.den)
    if slope.is_zero():
        raise NotAffineError(f"d{keep}/d{timevar} does not involve {other}")
    offset = RatFunc(f.num.at_zero(other), f.den)
    p = RatFunc.var(ext, 'p')
    solved = (p - offset) / slope

    # d/dt along the flow: dt + (keep)' d/d(keep) + (other)' d/d(other)
    second = f.diff(timevar) + f.diff(keep) * p + f.diff(other) * g
    rhs = second.subst({other: solved})
    rename = {keep: 'x'} if keep != 'x' else {}
    if timevar != 't':
        rename[timevar] = 't'
    logger.debug(f"eliminated {other} from the {keep} equation")
    return ScalarODE(rhs.rebase(target, rename), name=name)


def eliminate_y(H: QuadraticHamiltonian) -> ScalarODE:
    """x'' from x' = dH/dy, y' = -dH/dx with y = (p - B)/(2A)."""
    h = H.H
    return eliminate_system(h.diff('y'), -h.diff('x'), ('x', 'y'), 'x',
                            target=H.vars, name=f"eliminated {H.name}".strip())


def chart_reduction(atlas: Atlas, chart_id: str, keep: str) -> ScalarODE:
    """Scalar equation of one coordinate of a chart's time-flow system."""
    if atlas.coboundary is None:
        raise AtlasError(f"atlas {atlas.name} has no coboundary fields")
    dx, dy = ode_system(atlas.coboundary)[chart_id]
    chart = atlas.chart(chart_id)
    return eliminate_system(dx, dy, chart.coordinates, keep, atlas.timevar,
                            name=f"{atlas.name} chart {chart_id}")


def _as_ratfunc(value: Value, vars: VarTable) -> RatFunc:
    if isinstance(value, RatFunc):
        return value
    if isinstance(value, str):
        return parse_expr(value, vars)
    return RatFunc.const(vars, Fraction(value))


def specialize(ode: ScalarODE, values: Mapping[str, Value]) -> ScalarODE:
    vars = ode.rhs.vars
    assignment = {k: _as_ratfunc(v, vars) for k, v in values.items()}
    return ScalarODE(ode.rhs.subst(assignment), ode.name, ode.position, ode.velocity, ode.timevar)


def relabel(ode: ScalarODE, rename: Mapping[str, str]) -> ScalarODE:
    """Simultaneous renaming of variables inside the same table."""
    position, velocity, timevar = (rename.get(v, v) for v in (ode.position, ode.velocity, ode.timevar))
    return ScalarODE(ode.rhs.rebase(ode.rhs.vars, rename), ode.name, position, velocity, timevar)


def rescale(ode: ScalarODE, a: Union[Fraction, int, str], b: Union[Fraction, int, str]) -> ScalarODE:
    """Equation satisfied by X(T) = a*u(b*T) when u solves ode."""
    a, b = Fraction(a), Fraction(b)
    if not a or not b:
        raise ValueError("rescaling factors must be nonzero")
    vars = ode.rhs.vars
    x = RatFunc.var(vars, ode.position)
    p = RatFunc.var(vars, ode.velocity)
    t = RatFunc.var(vars, ode.timevar)
    moved = ode.rhs.subst({ode.position: x / a, ode.velocity: p / (a * b), ode.timevar: t * b})
    return ScalarODE(moved * (a * b * b), ode.name, ode.position, ode.velocity, ode.timevar)


@lru_cache(maxsize=None)
def _display_factors() -> Tuple[Poly, ...]:
    """Factors cancelled from residuals before they are shown."""
    return tuple(parse_expr(text, PAINLEVE_VARS).num for text in ('t', 'x', 'x - 1', 'x - t', 't - 1'))


def compare(a: ScalarODE, b: ScalarODE, param_map: Optional[ParamMap] = None,
            name: Optional[str] = None) -> CheckResult:
    """a.rhs == b.rhs after substituting the classical constants of b through param_map."""
    rhs_b = b.rhs if b.rhs.vars == a.rhs.vars else b.rhs.rebase(a.rhs.vars)
    if param_map is not None and not param_map.is_empty():
        rhs_b = rhs_b.subst(param_map.assignment())
    residual = a.rhs - rhs_b
    label = name or f"{a.name or 'lhs'} vs {b.name or 'rhs'}"
    if residual.is_zero():
        return CheckResult(name=label, passed=True, detail=f"match: {b}")
    if a.rhs.vars == PAINLEVE_VARS:
        residual = residual.cancel(_display_factors())
    return CheckResult(name=label, passed=False, residual=str(residual), detail=f"mismatch against {b}")


class PainleveController:
    """Handles elimination reports over the Painleve catalog."""

    def elimination(self, tag: str) -> Tuple[ScalarODE, CheckResult]:
        s = system(tag)
        if s.hamiltonian is None:
            raise PainleveError(f"{s.title} has no Hamiltonian in the catalog")
        ode = eliminate_y(s.hamiltonian)
        result = compare(ode, s.ode, s.params, name=f"{s.title} elimination")
        if not result.passed:
            logger.warning(f"{s.title}: eliminated equation differs from the classical form")
        return ode, result

    def elimination_report(self, tags: Sequence[str] = CLASSICAL_TAGS) -> VerificationReport:
        report = VerificationReport(title="Painleve eliminations")
        for tag in tags:
            report.add(self.elimination(tag)[1])
        return report

    def reduction(self, key: str) -> Tuple[ScalarODE, VerificationReport]:
        rows = load_tables()['reductions']
        if key not in rows:
            raise UnknownSystemError(f"unknown reduction {key!r}; known reductions are {', '.join(rows)}")
        row = rows[key]
        ode = chart_reduction(builtin_atlas(row['atlas']), row['chart'], row['keep'])
        report = VerificationReport(title=f"{row['atlas']} chart {row['chart']} reduction")
        expected = ScalarODE(_parse(row['ode']), name=f"{row['atlas']} chart {row['chart']}")
        report.add(compare(ode, expected, name=f"{key} scalar form"))
        target = system(row['matches'])
        scaled = ode
        if 'rescale' in row:
            scaled = rescale(ode, row['rescale']['a'], row['rescale']['b'])
        report.add(compare(scaled, target.ode, name=f"{key} vs {target.title}"))
        return ode, report

    def specialization_report(self) -> VerificationReport:
        report = VerificationReport(title="P_III specialisations")
        for tag, row in load_tables()['specializations'].items():
            values = {k: _parse(v) for k, v in row['values'].items()}
            derived = specialize(system(row['of']).ode, values)
            report.add(compare(derived, system(tag).ode, name=f"{row['of']} -> {tag}"))
        return report

    def full_report(self) -> VerificationReport:
        report = self.elimination_report()
        for key in load_tables()['reductions']:
            report.merge(self.reduction(key)[1])
        report.merge(self.specialization_report())
        return report
