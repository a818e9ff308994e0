"""
Atlas Model
-----------
Charts, symplectic densities and rational transitions of a family of open
surfaces over the (parameter, time) base.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

from src.models.fields import ChartVectorField, Coboundary, HamiltonianDef
from src.models.ratfunc import Poly, RatFunc, VarTable
from src.utils.errors import AtlasError, MissingTransitionError, UnknownChartError


@dataclass(frozen=True, eq=False)
class Chart:
    """Affine chart localized at denom, carrying the density dx^dy / denom^pole_order."""

    id: str
    x_var: str
    y_var: str
    denom: Poly
    pole_order: int = 0

    def __post_init__(self):
        if self.x_var == self.y_var:
            raise AtlasError(f"chart {self.id}: coordinates must be distinct")
        if self.pole_order < 0:
            raise AtlasError(f"chart {self.id}: pole order must be nonnegative")
        if self.denom.is_zero():
            raise AtlasError(f"chart {self.id}: localization polynomial is zero")

    @property
    def coordinates(self) -> Tuple[str, str]:
        return (self.x_var, self.y_var)


@dataclass(frozen=True, eq=False)
class TwoFormDensity:
    """Coefficient g of the two-form g dx^dy on a chart."""

    chart: str
    value: RatFunc

    @classmethod
    def for_chart(cls, chart: Chart) -> 'TwoFormDensity':
        g = RatFunc(Poly.one(chart.denom.vars), chart.denom ** chart.pole_order)
        return cls(chart.id, g)


@dataclass(frozen=True, eq=False)
class Transition:
    """Target coordinates as rational functions of source coordinates."""

    source: str
    target: str
    x_expr: RatFunc
    y_expr: RatFunc
    # the images as written in the atlas file, when loaded from one
    source_text: Optional[Tuple[str, str]] = None


@dataclass(frozen=True, eq=False)
class Atlas:
    """A finite chart atlas with directional transitions stored in both directions."""

    name: str
    vars: VarTable
    params: Tuple[str, ...]
    timevar: str
    charts: Tuple[Chart, ...]
    densities: Mapping[str, TwoFormDensity]
    transitions: Mapping[Tuple[str, str], Transition]
    coboundary: Optional[Coboundary] = None
    hamiltonians: Mapping[str, HamiltonianDef] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    # -- lookup ----------------------------------------------------------------

    @property
    def chart_ids(self) -> List[str]:
        return [c.id for c in self.charts]

    def chart(self, chart_id: str) -> Chart:
        for c in self.charts:
            if c.id == chart_id:
                return c
        raise UnknownChartError(f"atlas {self.name} has no chart {chart_id!r}")

    def density(self, chart_id: str) -> TwoFormDensity:
        self.chart(chart_id)
        return self.densities[chart_id]

    def transition(self, source: str, target: str) -> Transition:
        if source == target:
            return self.identity_transition(source)
        try:
            return self.transitions[(source, target)]
        except KeyError:
            raise MissingTransitionError(
                f"atlas {self.name} has no transition {source} -> {target}"
            ) from None

    def inverse(self, tr: Transition) -> Transition:
        return self.transition(tr.target, tr.source)

    def has_transition(self, source: str, target: str) -> bool:
        return source == target or (source, target) in self.transitions

    def neighbors(self, chart_id: str) -> List[str]:
        return [t for (s, t) in self.transitions if s == chart_id]

    def identity_transition(self, chart_id: str) -> Transition:
        c = self.chart(chart_id)
        return Transition(c.id, c.id, RatFunc.var(self.vars, c.x_var), RatFunc.var(self.vars, c.y_var))

    def assignment(self, tr: Transition) -> Dict[str, RatFunc]:
        """Substitution sending the target chart's coordinates to the transition's images."""
        target = self.chart(tr.target)
        return {target.x_var: tr.x_expr, target.y_var: tr.y_expr}

    def chart_scope(self, chart_id: str) -> Tuple[str, ...]:
        """Variables an expression on this chart may use."""
        c = self.chart(chart_id)
        return (c.x_var, c.y_var, self.timevar) + self.params

    def localizations(self) -> List[Poly]:
        """Non-constant chart localization polynomials, the factors worth cancelling."""
        found: List[Poly] = []
        for c in self.charts:
            if not c.denom.is_constant() and all(c.denom != p for p in found):
                found.append(c.denom)
        return found

    def simplify(self, f: RatFunc) -> RatFunc:
        return f.cancel(self.localizations())

    def zero_field(self, chart_id: str) -> ChartVectorField:
        zero = RatFunc.zero(self.vars)
        return ChartVectorField(chart_id, zero, zero)

    def zero_coboundary(self) -> Coboundary:
        return Coboundary({c: self.zero_field(c) for c in self.chart_ids})

    # -- derived atlases -------------------------------------------------------

    def with_transition(self, tr: Transition) -> 'Atlas':
        updated = dict(self.transitions)
        updated[(tr.source, tr.target)] = tr
        return replace(self, transitions=updated)

    def with_coboundary(self, coboundary: Optional[Coboundary]) -> 'Atlas':
        return replace(self, coboundary=coboundary)

    # -- structure -------------------------------------------------------------

    def validate(self) -> None:
        ids = self.chart_ids
        if len(set(ids)) != len(ids):
            raise AtlasError(f"atlas {self.name}: duplicate chart ids")
        reserved = {self.timevar, *self.params}
        seen = set()
        for c in self.charts:
            for v in c.coordinates:
                if v not in self.vars:
                    raise AtlasError(f"chart {c.id}: unknown variable {v}")
                if v in reserved:
                    raise AtlasError(f"chart {c.id}: {v} is the time variable or a parameter")
                if v in seen:
                    raise AtlasError(f"chart {c.id}: variable {v} already used by another chart")
                seen.add(v)
            self._check_scope(c.id, RatFunc(c.denom), f"chart {c.id} denom")
            if c.id not in self.densities:
                raise AtlasError(f"atlas {self.name}: no density for chart {c.id}")
        for (s, t), tr in self.transitions.items():
            if (tr.source, tr.target) != (s, t):
                raise AtlasError(f"transition stored under ({s}, {t}) claims {tr.source} -> {tr.target}")
            self.chart(s)
            self.chart(t)
            if (t, s) not in self.transitions:
                raise AtlasError(f"atlas {self.name}: transition {s} -> {t} has no reverse")
            self._check_scope(s, tr.x_expr, f"transition {s} -> {t}")
            self._check_scope(s, tr.y_expr, f"transition {s} -> {t}")
        if self.coboundary is not None:
            for cid, vf in self.coboundary.fields.items():
                self.chart(cid)
                self._check_scope(cid, vf.eta, f"coboundary {cid}")
                self._check_scope(cid, vf.zeta, f"coboundary {cid}")
        for cid, h in self.hamiltonians.items():
            self._check_scope(cid, h.H, f"hamiltonian {cid}")
        if ids and not self._connected():
            raise AtlasError(f"atlas {self.name}: transition graph is not connected")

    def _check_scope(self, chart_id: str, f, what: str) -> None:
        if not isinstance(f, RatFunc):
            return
        allowed = set(self.chart_scope(chart_id))
        stray = [v for v in f.variables() if v not in allowed]
        if stray:
            raise AtlasError(f"{what}: uses {', '.join(stray)} outside chart {chart_id}")

    def _connected(self) -> bool:
        start = self.charts[0].id
        reached = {start}
        queue = deque([start])
        while queue:
            c = queue.popleft()
            for n in self.neighbors(c):
                if n not in reached:
                    reached.add(n)
                    queue.append(n)
        return len(reached) == len(self.charts)
