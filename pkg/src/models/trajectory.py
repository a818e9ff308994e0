"""
Trajectory Model
----------------
Phase states on a chart, complex time paths and recorded trajectories.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from src.utils.errors import InvalidPathError


def _pair(z: complex) -> List[float]:
    return [z.real, z.imag]


@dataclass(frozen=True)
class PhaseState:
    chart: str
    x: complex
    y: complex
    t: complex

    def moved(self, chart: str, x: complex, y: complex) -> 'PhaseState':
        return PhaseState(chart, x, y, self.t)


@dataclass(frozen=True)
class TPath:
    """Polyline of complex times with numeric parameter values."""

    waypoints: Tuple[complex, ...]
    params: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise InvalidPathError("a time path needs at least two waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise InvalidPathError(f"consecutive waypoints coincide at {a}")

    @classmethod
    def line(cls, t0: complex, t1: complex, params: Optional[Mapping[str, complex]] = None) -> 'TPath':
        return cls((complex(t0), complex(t1)), dict(params or {}))

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    def segments(self) -> List[Tuple[complex, complex]]:
        return list(zip(self.waypoints, self.waypoints[1:]))

    def length(self) -> float:
        return sum(abs(b - a) for a, b in self.segments())

    def reversed(self) -> 'TPath':
        return TPath(tuple(reversed(self.waypoints)), self.params)


@dataclass(frozen=True)
class Sample:
    t: complex
    chart: str
    x: complex
    y: complex
    h: float
    err: float

    def to_dict(self) -> Dict[str, Any]:
        return {'t': _pair(self.t), 'chart': self.chart, 'x': _pair(self.x), 'y': _pair(self.y),
                'h': self.h, 'err': self.err}

    def state(self) -> PhaseState:
        return PhaseState(self.chart, self.x, self.y, self.t)


@dataclass(frozen=True)
class SwitchEvent:
    t: complex
    source: str
    target: str
    roundtrip: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'t': _pair(self.t), 'from': self.source, 'to': self.target}


@dataclass
class Trajectory:
    """Accepted samples in path order plus the chart switches between them."""

    atlas: str
    params: Dict[str, complex]
    samples: List[Sample] = field(default_factory=list)
    switches: List[SwitchEvent] = field(default_factory=list)
    steps: int = 0
    rejected: int = 0
    completed: bool = True

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def add(self, sample: Sample) -> None:
        self.samples.append(sample)

    def to_dict(self) -> Dict[str, Any]:
        params = {k: (v.real if complex(v).imag == 0 else _pair(complex(v))) for k, v in self.params.items()}
        return {
            'atlas': self.atlas,
            'params': params,
            'samples': [s.to_dict() for s in self.samples],
            'switches': [e.to_dict() for e in self.switches],
        }

    def rows(self) -> List[Dict[str, Any]]:
        """Flat records for tabular output."""
        return [
            {'t_re': s.t.real, 't_im': s.t.imag, 'chart': s.chart,
             'x_re': s.x.real, 'x_im': s.x.imag, 'y_re': s.y.real, 'y_im': s.y.imag,
             'h': s.h, 'err': s.err}
            for s in self.samples
        ]
