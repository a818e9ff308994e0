"""
Chart Fields
------------
Per-chart vector fields, one-forms and Hamiltonians, plus the Cech
cocycle and coboundary containers built from them.
"""

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Tuple

from src.models.ratfunc import RatFunc


@dataclass(frozen=True, eq=False)
class ChartVectorField:
    """eta d/dx + zeta d/dy in one chart's coordinates."""

    chart: str
    eta: RatFunc
    zeta: RatFunc

    def is_zero(self) -> bool:
        return self.eta.is_zero() and self.zeta.is_zero()

    def __add__(self, other: 'ChartVectorField') -> 'ChartVectorField':
        _same_chart(self.chart, other.chart)
        return ChartVectorField(self.chart, self.eta + other.eta, self.zeta + other.zeta)

    def __sub__(self, other: 'ChartVectorField') -> 'ChartVectorField':
        _same_chart(self.chart, other.chart)
        return ChartVectorField(self.chart, self.eta - other.eta, self.zeta - other.zeta)

    def __neg__(self) -> 'ChartVectorField':
        return ChartVectorField(self.chart, -self.eta, -self.zeta)

    def scale(self, c) -> 'ChartVectorField':
        return ChartVectorField(self.chart, self.eta * c, self.zeta * c)

    def equals(self, other: 'ChartVectorField') -> bool:
        return (self.chart == other.chart
                and self.eta.equals(other.eta)
                and self.zeta.equals(other.zeta))

    def __str__(self) -> str:
        return f"({self.eta}) d/dx + ({self.zeta}) d/dy on {self.chart}"


def _same_chart(a: str, b: str) -> None:
    if a != b:
        raise ValueError(f"fields live on different charts: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class CechCocycle:
    """Entries (i, j) -> field expressed in chart i.

    pulled optionally holds the same entry with its coefficients written in
    chart j coordinates (the raw t-derivative of transition j -> i).
    """

    entries: Mapping[Tuple[str, str], ChartVectorField]
    pulled: Mapping[Tuple[str, str], Tuple[RatFunc, RatFunc]] = field(default_factory=dict)

    def __getitem__(self, pair: Tuple[str, str]) -> ChartVectorField:
        return self.entries[pair]

    def __contains__(self, pair: object) -> bool:
        return pair in self.entries

    def __iter__(self) -> Iterator[Tuple[str, str]]:
        return iter(self.entries)

    def pairs(self):
        return sorted(self.entries)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.entries.values())

    def replace(self, pair: Tuple[str, str], entry: ChartVectorField) -> 'CechCocycle':
        updated = dict(self.entries)
        updated[pair] = entry
        pulled = {p: v for p, v in self.pulled.items() if p != pair}
        return CechCocycle(updated, pulled)


@dataclass(frozen=True, eq=False)
class Coboundary:
    """One field theta_i per chart splitting a cocycle."""

    fields: Mapping[str, ChartVectorField] = field(default_factory=dict)

    def __getitem__(self, chart: str) -> ChartVectorField:
        return self.fields[chart]

    def __contains__(self, chart: object) -> bool:
        return chart in self.fields

    def charts(self):
        return list(self.fields)

    def negated(self) -> 'Coboundary':
        """The splitting of the opposite orientation, theta_i -> -theta_i."""
        return Coboundary({c: -v for c, v in self.fields.items()})


@dataclass(frozen=True, eq=False)
class OneForm:
    """a dx + b dy on a chart."""

    chart: str
    a: RatFunc
    b: RatFunc

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __neg__(self) -> 'OneForm':
        return OneForm(self.chart, -self.a, -self.b)

    def equals(self, other: 'OneForm') -> bool:
        return self.chart == other.chart and self.a.equals(other.a) and self.b.equals(other.b)


@dataclass(frozen=True, eq=False)
class HamiltonianDef:
    chart: str
    H: RatFunc

    def __str__(self) -> str:
        return f"H[{self.chart}] = {self.H}"

