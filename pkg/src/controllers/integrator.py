"""
Integrator
----------
Adaptive Dormand-Prince 5(4) integration of the per-chart time-flow systems
over complex phase space, with chart switching driven by a health score so
that trajectories pass through the movable poles of the scalar solution.

The right-hand side on chart i is (dx/dt, dy/dt) = (-eta_i, -zeta_i).
Steps are complex: along a path segment from a to b every step is a real
multiple of (b - a)/|b - a|.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from src.models.atlas import Atlas, Transition
from src.models.fields import Coboundary
from src.models.painleve import ScalarODE
from src.models.ratfunc import compile_ratfunc
from src.models.trajectory import PhaseState, Sample, SwitchEvent, TPath, Trajectory
from src.utils.config import IntegratorSettings
from src.utils.errors import (
    EvaluationError,
    InaccessibleStateError,
    InsufficientSamplesError,
    InvalidPathError,
    MissingValueError,
    PoleAtStartError,
    StepSizeUnderflowError,
)
from src.utils.expr_parser import Evaluator, compile_expr

Vector = Tuple[complex, complex]
RHS = Callable[[complex, complex, complex], Vector]

# Dormand-Prince 5(4) tableau; stage nodes are the row sums of A
A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

PI_BETA1 = 0.7 / 5
PI_BETA2 = 0.4 / 5


class ChartRHS:
    """Numeric (dx/dt, dy/dt) = (-eta, -zeta) on one chart."""

    def __init__(self, atlas: Atlas, chart_id: str, eta, zeta):
        chart = atlas.chart(chart_id)
        self.chart = chart_id
        self.vars = atlas.vars
        self.params = atlas.params
        self._ix = atlas.vars.index(chart.x_var)
        self._iy = atlas.vars.index(chart.y_var)
        self._it = atlas.vars.index(atlas.timevar)
        self._fx = compile_ratfunc(-eta)
        self._fy = compile_ratfunc(-zeta)

    def base(self, params: Optional[Mapping[str, complex]] = None) -> List[complex]:
        params = params or {}
        values = [0j] * len(self.vars)
        for name in self.params:
            if name not in params:
                raise MissingValueError(name)
            values[self.vars.index(name)] = complex(params[name])
        return values

    def bind(self, params: Optional[Mapping[str, complex]] = None) -> RHS:
        base = self.base(params)
        ix, iy, it, fx, fy = self._ix, self._iy, self._it, self._fx, self._fy

        def rhs(x: complex, y: complex, t: complex) -> Vector:
            v = base.copy()
            v[ix] = x
            v[iy] = y
            v[it] = t
            return fx(v), fy(v)

        return rhs

    def __call__(self, x: complex, y: complex, t: complex,
                 params: Optional[Mapping[str, complex]] = None) -> Vector:
        return self.bind(params)(complex(x), complex(y), complex(t))


def compile_rhs(atlas: Atlas, b: Coboundary) -> Dict[str, ChartRHS]:
    return {cid: ChartRHS(atlas, cid, vf.eta, vf.zeta) for cid, vf in b.fields.items()}


@dataclass(frozen=True)
class _NumericTransition:
    x: Evaluator
    y: Evaluator

    @classmethod
    def compile(cls, atlas: Atlas, tr: Transition) -> '_NumericTransition':
        """Evaluate in the factored form of the atlas file when it is known."""
        if tr.source_text is not None:
            x_text, y_text = tr.source_text
            return cls(compile_expr(x_text, atlas.vars), compile_expr(y_text, atlas.vars))
        return cls(compile_ratfunc(tr.x_expr), compile_ratfunc(tr.y_expr))


class NumericAtlas:
    """Compiled transitions, localizations and right-hand sides of an atlas."""

    def __init__(self, atlas: Atlas, b: Coboundary):
        self.atlas = atlas
        self.rhs = compile_rhs(atlas, b)
        self.transitions = {
            key: _NumericTransition.compile(atlas, tr) for key, tr in atlas.transitions.items()
        }
        self.localizations = {c.id: c.denom for c in atlas.charts}
        self.coords = {
            c.id: (atlas.vars.index(c.x_var), atlas.vars.index(c.y_var)) for c in atlas.charts
        }
        self.it = atlas.vars.index(atlas.timevar)

    def bind(self, params: Optional[Mapping[str, complex]] = None) -> 'BoundAtlas':
        return BoundAtlas(self, params or {})


@lru_cache(maxsize=16)
def numeric_atlas(atlas: Atlas, b: Coboundary) -> NumericAtlas:
    return NumericAtlas(atlas, b)


class BoundAtlas:
    """A NumericAtlas with parameter values fixed."""

    def __init__(self, numeric: NumericAtlas, params: Mapping[str, complex]):
        self.numeric = numeric
        self.atlas = numeric.atlas
        first = next(iter(numeric.rhs.values()))
        self._base = first.base(params)
        self.rhs: Dict[str, RHS] = {cid: r.bind(params) for cid, r in numeric.rhs.items()}

    def _values(self, chart: str, x: complex, y: complex, t: complex) -> List[complex]:
        ix, iy = self.numeric.coords[chart]
        v = self._base.copy()
        v[ix] = x
        v[iy] = y
        v[self.numeric.it] = t
        return v

    def transform(self, state: PhaseState, target: str) -> PhaseState:
        if target == state.chart:
            return state
        tr = self.numeric.transitions.get((state.chart, target))
        if tr is None:
            raise InvalidPathError(f"no transition {state.chart} -> {target}")
        v = self._values(state.chart, state.x, state.y, state.t)
        return state.moved(target, tr.x(v), tr.y(v))

    def localization(self, state: PhaseState) -> complex:
        v = self._values(state.chart, state.x, state.y, state.t)
        return self.numeric.localizations[state.chart].evaluate(v)

    def health(self, state: PhaseState) -> float:
        """|f_i| / (1 + |x|^2 + |y|^2) on the state's own chart."""
        try:
            f = abs(self.localization(state))
            score = f / (1 + abs(state.x) ** 2 + abs(state.y) ** 2)
        except OverflowError:
            return 0.0
        return score if np.isfinite(score) else 0.0

    def scores(self, state: PhaseState) -> Dict[str, float]:
        out = {state.chart: self.health(state)}
        for cid in self.atlas.neighbors(state.chart):
            try:
                out[cid] = self.health(self.transform(state, cid))
            except (EvaluationError, OverflowError, ZeroDivisionError):
                out[cid] = 0.0
        return out

    def roundtrip(self, state: PhaseState, target: str) -> Tuple[PhaseState, float]:
        there = self.transform(state, target)
        back = self.transform(there, state.chart)
        size = max(1.0, abs(state.x), abs(state.y))
        return there, max(abs(back.x - state.x), abs(back.y - state.y)) / size


def chart_health(state: PhaseState, atlas: Atlas, b: Optional[Coboundary] = None,
                 params: Optional[Mapping[str, complex]] = None) -> Dict[str, float]:
    """Health score of the state's chart and of every chart reachable by one transition."""
    b = b or atlas.coboundary or atlas.zero_coboundary()
    return numeric_atlas(atlas, b).bind(params).scores(state)


def transform_state(atlas: Atlas, state: PhaseState, target: str,
                    params: Optional[Mapping[str, complex]] = None) -> PhaseState:
    b = atlas.coboundary or atlas.zero_coboundary()
    return numeric_atlas(atlas, b).bind(params).transform(state, target)


# -- one step ----------------------------------------------------------------

def _dopri_step(rhs: RHS, x: complex, y: complex, t: complex, h: complex,
                k1: Optional[Vector] = None) -> Tuple[np.ndarray, np.ndarray, Vector]:
    """New (x, y, t), embedded (x, y) error and the last stage (reusable as the next k1).

    Time is carried as a third component with derivative 1 and combined with
    the same weights, in the same order, as x and y. Stage times are then
    rounded exactly like the coordinates, so a solution that is linear in t
    (such as y = t/2) stays on its line in floating point.
    """
    k = np.zeros((7, 3), dtype=complex)
    k[:, 2] = 1
    k[0, :2] = k1 if k1 is not None else rhs(x, y, t)
    state = np.array([x, y, t], dtype=complex)
    for i in range(1, 7):
        # row-by-row sum down axis 0, identical for every column
        stage = state + h * (A[i, :i, None] * k[:i]).sum(axis=0)
        k[i, :2] = rhs(complex(stage[0]), complex(stage[1]), complex(stage[2]))
    # the last row of A is the fifth-order weight vector, so the final stage is the new state
    new = stage
    err = h * (E @ k[:, :2])
    if not np.all(np.isfinite(new)):
        raise OverflowError("step produced a non-finite state")
    return new, err, (complex(k[6, 0]), complex(k[6, 1]))


def step(state: PhaseState, rhs: RHS, h: complex) -> Tuple[PhaseState, float]:
    """One embedded 5(4) step; the error is the max-norm of the embedded difference."""
    if h == 0:
        raise ValueError("step size must be nonzero")
    new, err, _ = _dopri_step(rhs, state.x, state.y, state.t, complex(h))
    return (PhaseState(state.chart, complex(new[0]), complex(new[1]), state.t + h),
            float(np.max(np.abs(err))))


# -- integration -------------------------------------------------------------

class _Runner:
    """Stepping state machine for one integration."""

    def __init__(self, bound: BoundAtlas, settings: IntegratorSettings, length: float,
                 traj: Trajectory):
        self.bound = bound
        self.s = settings
        self.traj = traj
        self.h_min = settings.h_min_factor * length
        self.h: Optional[float] = None
        self.prev_err = 1.0
        self.k1: Optional[Vector] = None
        self.exhausted = False

    def _scaled(self, old: np.ndarray, new: np.ndarray, err: np.ndarray) -> float:
        sc = self.s.atol + self.s.rtol * np.maximum(np.abs(old), np.abs(new))
        return float(np.max(np.abs(err) / sc))

    def _initial_step(self, state: PhaseState, direction: complex, remaining: float) -> float:
        rhs = self.bound.rhs[state.chart]
        X = np.array([state.x, state.y])
        sc = self.s.atol + self.s.rtol * np.abs(X)
        f0 = np.array(rhs(state.x, state.y, state.t))
        d0 = float(np.max(np.abs(X) / sc))
        d1 = float(np.max(np.abs(f0) / sc))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, remaining)
        try:
            X1 = X + h0 * direction * f0
            f1 = np.array(rhs(complex(X1[0]), complex(X1[1]), state.t + h0 * direction))
            d2 = float(np.max(np.abs(f1 - f0) / sc)) / h0
        except (EvaluationError, OverflowError):
            return h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, remaining)

    def segment(self, state: PhaseState, a: complex, b: complex) -> PhaseState:
        s = self.s
        traj = self.traj
        length = abs(b - a)
        direction = (b - a) / length
        done = 0.0
        fixed = s.fixed_step is not None
        if fixed:
            self.h = s.fixed_step
        elif self.h is None:
            self.h = self._initial_step(state, direction, length)
        rejected_last = False
        while done < length:
            if traj.steps >= s.max_steps:
                logger.warning(f"max_steps={s.max_steps} reached at t={state.t}")
                self.exhausted = True
                return state
            remaining = length - done
            h = self.h if s.max_step is None else min(self.h, s.max_step)
            last = h >= remaining
            if last:
                h = remaining
            elif h < self.h_min:
                raise StepSizeUnderflowError(state.t, h, self.h_min)
            dt = h * direction
            rhs = self.bound.rhs[state.chart]
            try:
                new, err, k_last = _dopri_step(rhs, state.x, state.y, state.t, dt, self.k1)
            except (EvaluationError, OverflowError, ZeroDivisionError):
                traj.rejected += 1
                self.k1 = None
                retried = bool(traj.switches) and traj.switches[-1].t == state.t
                if not retried and self._switch(state, pole=True):
                    state = traj.final.state()
                    continue
                if fixed:
                    raise
                self.h = h / 2
                continue
            old = np.array([state.x, state.y])
            scaled = self._scaled(old, new[:2], err)
            if fixed or scaled <= 1.0:
                done = length if last else done + h
                # waypoints are hit exactly; in between the stepped time is kept
                t_new = b if last else complex(new[2])
                state = PhaseState(state.chart, complex(new[0]), complex(new[1]), t_new)
                traj.steps += 1
                traj.add(Sample(t_new, state.chart, state.x, state.y, h, float(np.max(np.abs(err)))))
                self.k1 = None if last else k_last
                if not fixed:
                    self.h = h * self._factor(scaled, rejected_last)
                rejected_last = False
                if self._switch(state):
                    state = traj.final.state()
            else:
                traj.rejected += 1
                rejected_last = True
                self.h = h * max(s.min_factor, s.safety * scaled ** -0.2)
        return state

    def _factor(self, scaled: float, rejected_last: bool) -> float:
        s = self.s
        if scaled == 0.0:
            factor = s.max_factor
        else:
            factor = s.safety * scaled ** -PI_BETA1 * self.prev_err ** PI_BETA2
        self.prev_err = max(scaled, 1e-4)
        if rejected_last:
            factor = min(factor, 1.0)
        return min(s.max_factor, max(s.min_factor, factor))

    def _switch(self, state: PhaseState, pole: bool = False) -> bool:
        """Move to a healthier chart when the rules ask for it; True when a switch happened."""
        s = self.s
        if s.switching == 'off':
            return False
        scores = self.bound.scores(state)
        if max(scores.values()) < s.switch_floor:
            raise InaccessibleStateError(state.t, scores)
        current = scores.pop(state.chart)
        if not scores:
            return False
        target = max(scores, key=scores.get)
        best = scores[target]
        forced = s.switching == 'forced' and self.traj.steps % s.force_every == 0
        if not (pole or forced or current < s.hysteresis * best):
            return False
        if best < s.switch_floor:
            return False
        try:
            moved, residual = self.bound.roundtrip(state, target)
        except (EvaluationError, OverflowError, ZeroDivisionError):
            logger.warning(f"switch {state.chart} -> {target} at t={state.t} failed to evaluate")
            return False
        if residual > s.roundtrip_tol:
            logger.warning(f"rejected switch {state.chart} -> {target} at t={state.t}: "
                           f"round trip residual {residual:.2e}")
            return False
        logger.debug(f"switch {state.chart} -> {target} at t={state.t}")
        self.traj.switches.append(SwitchEvent(state.t, state.chart, target, residual))
        self.traj.add(Sample(state.t, target, moved.x, moved.y, 0.0, 0.0))
        self.k1 = None
        return True


def _check_start(bound: BoundAtlas, init: PhaseState) -> None:
    if init.chart not in bound.rhs:
        raise PoleAtStartError(init.chart, "no field on this chart")
    if bound.localization(init) == 0:
        raise PoleAtStartError(init.chart, "the chart localization vanishes")
    try:
        bound.rhs[init.chart](init.x, init.y, init.t)
    except EvaluationError as exc:
        raise PoleAtStartError(init.chart, str(exc)) from exc


def integrate(atlas: Atlas, coboundary: Coboundary, path: TPath, init: PhaseState,
              rtol: Optional[float] = None, atol: Optional[float] = None,
              settings: Optional[IntegratorSettings] = None) -> Trajectory:
    """Follow path from init, switching charts as the health scores demand."""
    settings = settings or IntegratorSettings()
    updates = {k: v for k, v in (('rtol', rtol), ('atol', atol)) if v is not None}
    if updates:
        settings = settings.model_copy(update=updates)
    if init.t != path.start:
        raise InvalidPathError(f"initial time {init.t} is not the path start {path.start}")
    bound = numeric_atlas(atlas, coboundary).bind(path.params)
    _check_start(bound, init)

    traj = Trajectory(atlas.name, dict(path.params))
    traj.add(Sample(init.t, init.chart, init.x, init.y, 0.0, 0.0))
    runner = _Runner(bound, settings, path.length(), traj)
    logger.info(f"integrating atlas {atlas.name} from t={path.start} to t={path.end}")
    state = init
    for a, b in path.segments():
        state = runner.segment(state, a, b)
        if runner.exhausted:
            traj.completed = False
            break
    logger.info(f"{traj.steps} steps, {traj.rejected} rejected, {len(traj.switches)} switches")
    return traj


def single_sample(atlas: Atlas, coboundary: Coboundary, init: PhaseState,
                  params: Optional[Mapping[str, complex]] = None) -> Trajectory:
    """Trajectory of a zero-length path: the checked initial state only."""
    bound = numeric_atlas(atlas, coboundary).bind(params)
    _check_start(bound, init)
    traj = Trajectory(atlas.name, dict(params or {}))
    traj.add(Sample(init.t, init.chart, init.x, init.y, 0.0, 0.0))
    return traj


def residual_check(traj: Trajectory, ode: ScalarODE,
                   params: Optional[Mapping[str, complex]] = None,
                   chart: Optional[str] = None, coordinate: str = 'x',
                   min_ratio: float = 0.1) -> float:
    """Max |x'' - rhs(x, x', t)| over sample triples.

    Each triple is interpolated by the quadratic through its three samples,
    which is evaluated at the mean of the three times; there its second
    derivative is second-order accurate for uneven spacing too. Triples that
    leave the chart, straddle a switch or whose two gaps differ by more than
    a factor 1/min_ratio are skipped.
    """
    if coordinate not in ('x', 'y'):
        raise ValueError(f"coordinate must be 'x' or 'y', got {coordinate!r}")
    params = dict(traj.params if params is None else params)
    samples = traj.samples
    chart = chart or samples[0].chart
    worst = 0.0
    used = 0
    for prev, mid, nxt in zip(samples, samples[1:], samples[2:]):
        if not (prev.chart == mid.chart == nxt.chart == chart):
            continue
        h1 = mid.t - prev.t
        h2 = nxt.t - mid.t
        if h1 == 0 or h2 == 0 or min(abs(h1), abs(h2)) < min_ratio * max(abs(h1), abs(h2)):
            continue
        u0, u1, u2 = (getattr(s, coordinate) for s in (prev, mid, nxt))
        slope1 = (u1 - u0) / h1
        curvature = ((u2 - u1) / h2 - slope1) / (h1 + h2)
        at = (prev.t + mid.t + nxt.t) / 3
        value = u0 + (at - prev.t) * (slope1 + curvature * (at - mid.t))
        first = slope1 + curvature * (2 * at - prev.t - mid.t)
        worst = max(worst, abs(2 * curvature - ode.value(value, first, at, params)))
        used += 1
    if not used:
        raise InsufficientSamplesError(
            f"no usable sample triple on chart {chart} among {len(samples)} samples"
        )
    logger.debug(f"residual over {used} triples: {worst:.3e}")
    return worst
