"""Adaptive stepping, chart switching and the scalar residual check."""

import numpy as np
import pytest

from src.controllers.integrator import (
    chart_health,
    compile_rhs,
    integrate,
    numeric_atlas,
    residual_check,
    single_sample,
    step,
    transform_state,
)
from src.controllers.painleve_controller import system
from src.models.painleve import PAINLEVE_VARS, ScalarODE
from src.models.trajectory import PhaseState, Sample, TPath, Trajectory
from src.utils.atlas_dsl import dump_atlas, load_atlas_text
from src.utils.config import IntegratorSettings
from src.utils.errors import (
    EvaluationError,
    InsufficientSamplesError,
    InvalidPathError,
    MissingValueError,
    PoleAtStartError,
    StepSizeUnderflowError,
)
from src.utils.expr_parser import parse_expr

P2 = {'alpha': 0}


def _in_chart(atlas, sample, chart, params=P2):
    return transform_state(atlas, sample.state(), chart, params)


def _distance(a: PhaseState, b: PhaseState) -> float:
    assert a.chart == b.chart
    return max(abs(a.x - b.x), abs(a.y - b.y))


class TestStep:
    def test_zero_field(self):
        state = PhaseState('U0', 0.3 + 0.1j, -2, 1)
        moved, err = step(state, lambda x, y, t: (0j, 0j), 0.25)
        assert (moved.x, moved.y, moved.t) == (state.x, state.y, 1.25)
        assert err == 0.0

    def test_linear_dynamics(self):
        moved, _ = step(PhaseState('U0', 0, 1, 0), lambda x, y, t: (y, 0j), 0.125)
        assert abs(moved.x - 0.125) <= 1e-14
        assert moved.y == 1

    def test_exact_p2_solution(self, e7):
        rhs = compile_rhs(e7, e7.coboundary)['U0'].bind(P2)
        moved, err = step(PhaseState('U0', 0, 0.15, 0.3), rhs, 0.1)
        assert abs(moved.x) <= 1e-12
        assert abs(moved.y - moved.t / 2) <= 1e-12
        assert err <= 1e-12

    def test_complex_direction(self, e7):
        rhs = compile_rhs(e7, e7.coboundary)['U0'].bind(P2)
        moved, _ = step(PhaseState('U0', 0, 0, 0), rhs, 0.1j)
        assert abs(moved.y - 0.05j) <= 1e-12

    def test_zero_step(self):
        with pytest.raises(ValueError):
            step(PhaseState('U0', 0, 0, 0), lambda x, y, t: (0j, 0j), 0)

    def test_rhs_values(self, e7):
        rhs = compile_rhs(e7, e7.coboundary)['U0']
        assert rhs(0, 0, 0, P2) == (0, 0.5)
        with pytest.raises(MissingValueError):
            rhs(0, 0, 0)


class TestHealth:
    def test_far_state_prefers_the_infinity_chart(self, e7):
        scores = chart_health(PhaseState('U0', 1e6, 0, 0), e7, params={'alpha': -0.5})
        assert scores['U1'] > 1e9 * scores['U0']

    def test_unit_box(self, e7):
        scores = chart_health(PhaseState('U0', 0.5, -0.5j, 1), e7, params=P2)
        assert 1 / 3 <= scores['U0'] <= 1

    def test_d8_boundary_divisor(self, d8):
        scores = chart_health(PhaseState('U0', 0.5, 1e-9, 1), d8)
        assert scores['U0'] <= 1e-9

    def test_failed_transform_scores_zero(self, e7):
        assert chart_health(PhaseState('U0', 0, 1, 0), e7, params=P2)['U1'] == 0.0


class TestRoundTrips:
    @pytest.mark.parametrize('name, params', [('e7', {'alpha': 0.3}), ('d8', {})])
    def test_seeded_states(self, request, pyrng, name, params):
        atlas = request.getfixturevalue(name)
        bound = numeric_atlas(atlas, atlas.coboundary).bind(params)
        checked = 0
        for _ in range(1000):
            radius, angle = 2 * pyrng.random() ** 0.5, 2 * np.pi * pyrng.random()
            x = radius * np.exp(1j * angle)
            y = complex(pyrng.uniform(-1, 1), pyrng.uniform(-1, 1))
            t = (0.5 + pyrng.random()) * np.exp(2j * np.pi * pyrng.random())
            state = PhaseState(pyrng.choice(atlas.chart_ids), complex(x), y, complex(t))
            if bound.health(state) < 0.05:
                continue
            for target in atlas.neighbors(state.chart):
                try:
                    moved = bound.transform(state, target)
                except (EvaluationError, OverflowError, ZeroDivisionError):
                    continue
                if bound.health(moved) < 0.05:
                    continue
                _, residual = bound.roundtrip(state, target)
                assert residual <= 1e-12, (state, target)
                checked += 1
        assert checked >= 100

    def test_factored_and_expanded_transitions_agree(self, d8):
        expanded = load_atlas_text(dump_atlas(d8))
        assert expanded.transition('U1', 'U2').source_text != d8.transition('U1', 'U2').source_text
        state = PhaseState('U1', 0.4 + 0.1j, 0.8, 1.2)
        a = transform_state(d8, state, 'U2')
        b = transform_state(expanded, state, 'U2')
        assert _distance(a, b) <= 1e-10 * max(1.0, abs(a.x), abs(a.y))


class TestIntegrate:
    def test_exact_solution(self, e7):
        path = TPath.line(0, 10, P2)
        traj = integrate(e7, e7.coboundary, path, PhaseState('U0', 0, 0, 0))
        assert traj.completed
        assert not traj.switches
        assert traj.rejected == 0
        assert max(abs(s.x) for s in traj.samples) <= 1e-9
        assert traj.final.t == 10
        assert abs(traj.final.x) <= 1e-9
        assert abs(traj.final.y - 5) <= 1e-9
        assert max(abs(s.y - s.t / 2) for s in traj.samples) <= 1e-9

    def test_zero_field_keeps_the_state(self, e7):
        init = PhaseState('U0', 0.5, 0.5, 0)
        traj = integrate(e7, e7.zero_coboundary(), TPath.line(0, 3, P2), init)
        assert (traj.final.chart, traj.final.x, traj.final.y) == ('U0', init.x, init.y)

    def test_polyline_visits_every_waypoint(self, e7):
        path = TPath((0, 1j, 1 + 1j, 2), P2)
        traj = integrate(e7, e7.coboundary, path, PhaseState('U0', 0, 0, 0))
        times = {s.t for s in traj.samples}
        assert {1j, 1 + 1j, 2} <= times
        assert abs(traj.final.y - 1) <= 1e-9

    def test_reversibility(self, e7):
        rtol = 1e-9
        init = PhaseState('U0', 0.5, 0.2, 0)
        path = TPath.line(0, 2, P2)
        forward = integrate(e7, e7.coboundary, path, init, rtol=rtol)
        back = integrate(e7, e7.coboundary, path.reversed(), forward.final.state(), rtol=rtol)
        assert _distance(_in_chart(e7, back.final, 'U0'), init) <= 100 * rtol

    def test_forced_switching_agrees_with_none(self, e7):
        rtol = 1e-10
        init = PhaseState('U0', 0.5, 0.2, 0)
        path = TPath.line(0, 0.5, P2)
        plain = integrate(e7, e7.coboundary, path, init,
                          settings=IntegratorSettings(rtol=rtol, switching='off'))
        forced = integrate(e7, e7.coboundary, path, init,
                           settings=IntegratorSettings(rtol=rtol, switching='forced', force_every=5))
        assert not plain.switches
        assert forced.switches
        assert all(e.roundtrip <= 1e-12 for e in forced.switches)
        end = _in_chart(e7, forced.final, 'U0')
        assert _distance(end, plain.final.state()) <= 10 * rtol

    def test_switch_samples_repeat_the_time(self, e7):
        settings = IntegratorSettings(switching='forced', force_every=3)
        traj = integrate(e7, e7.coboundary, TPath.line(0, 0.5, P2), PhaseState('U0', 0.5, 0.2, 0),
                         settings=settings)
        for event in traj.switches:
            at = [s for s in traj.samples if s.t == event.t]
            assert [s.chart for s in at][-2:] == [event.source, event.target]
            assert at[-1].h == 0.0

    def test_max_steps(self, e7, log_messages):
        settings = IntegratorSettings(max_steps=5)
        traj = integrate(e7, e7.coboundary, TPath.line(0, 10, P2), PhaseState('U0', 0.5, 0.2, 0),
                         settings=settings)
        assert not traj.completed
        assert traj.steps == 5
        assert any(m['level'].name == 'WARNING' and 'max_steps' in m['message'] for m in log_messages)

    def test_step_size_underflow(self, e7):
        settings = IntegratorSettings(h_min_factor=0.5)
        with pytest.raises(StepSizeUnderflowError):
            integrate(e7, e7.coboundary, TPath.line(0, 1, P2), PhaseState('U0', 0, 0, 0),
                      settings=settings)

    def test_pole_at_start(self, d8):
        with pytest.raises(PoleAtStartError):
            integrate(d8, d8.coboundary, TPath.line(1, 2), PhaseState('U0', 0.5, 0, 1))

    def test_missing_parameter(self, e7):
        with pytest.raises(MissingValueError):
            integrate(e7, e7.coboundary, TPath.line(0, 1), PhaseState('U0', 0, 0, 0))

    def test_bad_paths(self, e7):
        with pytest.raises(InvalidPathError):
            TPath((0,), P2)
        with pytest.raises(InvalidPathError):
            TPath((0, 1, 1), P2)
        with pytest.raises(InvalidPathError):
            integrate(e7, e7.coboundary, TPath.line(0, 1, P2), PhaseState('U0', 0, 0, 0.5))

    def test_single_sample(self, e7, d8):
        traj = single_sample(e7, e7.coboundary, PhaseState('U0', 1, 2, 3), P2)
        assert len(traj.samples) == 1
        with pytest.raises(PoleAtStartError):
            single_sample(d8, d8.coboundary, PhaseState('U0', 1, 0, 1))

    def test_d8_flow(self, d8):
        traj = integrate(d8, d8.coboundary, TPath.line(1, 2), PhaseState('U0', 0.3, 0.8, 1), rtol=1e-10)
        assert traj.completed
        back = integrate(d8, d8.coboundary, TPath.line(2, 1), traj.final.state(), rtol=1e-10)
        home = transform_state(d8, back.final.state(), 'U0')
        assert _distance(home, PhaseState('U0', 0.3, 0.8, 1)) <= 1e-7


POLE_INIT = PhaseState('U0', 1, 1, 0)
POLE_RTOL = 1e-10


@pytest.fixture(scope='module')
def run(e7):
    return integrate(e7, e7.coboundary, TPath.line(0, 4, P2), POLE_INIT, rtol=POLE_RTOL)


class TestPolePassage:
    """P_II with alpha = 0 from (1, 1) blows up on the real axis before t = 4."""

    INIT = POLE_INIT
    RTOL = POLE_RTOL

    def test_completes_through_the_pole(self, run):
        assert run.completed
        assert run.final.t == 4
        assert {e.target for e in run.switches} - {'U0'}

    def test_pole_is_interior_to_a_chart(self, e7, run):
        pairs = [(a, b) for a, b in zip(run.samples, run.samples[1:])
                 if a.chart == b.chart != 'U0' and a.x.real * b.x.real < 0]
        assert pairs
        before, after = pairs[0]
        settings = IntegratorSettings(rtol=self.RTOL, switching='off')

        def coordinate_at(t):
            traj = integrate(e7, e7.coboundary, TPath.line(before.t, t, P2), before.state(),
                             settings=settings)
            return traj.final.x.real

        t0, t1 = before.t.real, after.t.real
        f0, f1 = before.x.real, after.x.real
        for _ in range(12):
            t2 = t1 - f1 * (t1 - t0) / (f1 - f0)
            t0, f0 = t1, f1
            t1, f1 = t2, coordinate_at(t2)
            if abs(f1) < 1e-8:
                break
        # x0 = 1/x on both infinity charts, so |x0| > 1e6
        assert abs(f1) < 1e-6

    def test_backward_recovers_the_start(self, e7, run):
        back = integrate(e7, e7.coboundary, TPath.line(4, 0, P2), run.final.state(), rtol=self.RTOL)
        home = _in_chart(e7, back.final, 'U0')
        assert _distance(home, self.INIT) <= 1e-6

    @pytest.mark.slow
    def test_matches_fixed_step_reference(self, e7, run):
        settings = IntegratorSettings(fixed_step=1e-5)
        ref = integrate(e7, e7.coboundary, TPath.line(0, 4, P2), self.INIT, settings=settings)
        assert ref.completed
        end = _in_chart(e7, ref.final, run.final.chart)
        assert _distance(end, run.final.state()) <= 1e-7


class TestResidual:
    def test_exact_solution(self, e7):
        settings = IntegratorSettings(max_step=0.05)
        traj = integrate(e7, e7.coboundary, TPath.line(0, 2, P2), PhaseState('U0', 0, 0, 0),
                         settings=settings)
        assert residual_check(traj, system('II').ode) <= 1e-8

    def test_adaptive_steps_without_a_cap(self, e7):
        traj = integrate(e7, e7.coboundary, TPath.line(0, 2, P2), PhaseState('U0', 0, 0, 0))
        steps = [s.h for s in traj.samples[1:]]
        assert max(steps) > 2 * min(steps)
        assert residual_check(traj, system('II').ode) <= 1e-8

    def test_uneven_spacing_is_interpolated(self):
        # x = t^2 + t solves x'' = 2 + p - 2*t - 1 exactly
        times = [0, 0.1, 0.3, 0.4, 0.6, 0.9]
        samples = [Sample(complex(t), 'U0', t * t + t, 0, 0.1, 0.0) for t in times]
        ode = ScalarODE(parse_expr('1 + p - 2*t', PAINLEVE_VARS))
        assert residual_check(Trajectory('toy', {}, samples), ode) <= 1e-12

    def test_constant_trajectory(self):
        samples = [Sample(complex(k) / 4, 'U0', 1.5, 0, 0.25, 0.0) for k in range(6)]
        traj = Trajectory('toy', {}, samples)
        assert residual_check(traj, ScalarODE(parse_expr('0', PAINLEVE_VARS))) == 0

    def test_generic_p2(self, e7):
        settings = IntegratorSettings(rtol=1e-10, max_step=1e-3)
        traj = integrate(e7, e7.coboundary, TPath.line(0, 1, P2), PhaseState('U0', 0.5, 0.2, 0),
                         settings=settings)
        assert residual_check(traj, system('II').ode) <= 1e-5

    def test_wrong_equation_shows_up(self, e7):
        settings = IntegratorSettings(max_step=0.01)
        traj = integrate(e7, e7.coboundary, TPath.line(0, 1, P2), PhaseState('U0', 0.5, 0.2, 0),
                         settings=settings)
        wrong = ScalarODE(parse_expr('2*x^3 + t*x + 1', PAINLEVE_VARS))
        assert residual_check(traj, wrong) > 0.5

    def test_too_few_samples(self, e7):
        traj = single_sample(e7, e7.coboundary, PhaseState('U0', 0, 0, 0), P2)
        with pytest.raises(InsufficientSamplesError):
            residual_check(traj, system('II').ode)
        with pytest.raises(ValueError):
            residual_check(traj, system('II').ode, coordinate='z')
