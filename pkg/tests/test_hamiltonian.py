"""Fundamental equation, Hamiltonian recovery and sign resolution."""

import pytest

from src.controllers.hamiltonian_controller import (
    PRIMARY_SIGN,
    HamiltonianController,
    contract,
    fundamental_check,
    hamiltonian_vector_field,
    recover_hamiltonian,
    same_modulo_time,
    verify_hamiltonian,
)
from src.controllers.kodaira_spencer import ode_system
from src.models.fields import ChartVectorField, HamiltonianDef
from src.utils.errors import NonPolynomialFieldError, NotClosedError, UnsupportedDensityError
from src.utils.expr_parser import parse_expr


def _p(atlas, text):
    return parse_expr(text, atlas.vars)


class TestRecovery:
    def test_e7_chart_zero(self, e7):
        recovered = recover_hamiltonian(e7.coboundary['U0'], e7.chart('U0'))
        assert recovered.H == _p(e7, '1/2*y0^2 - (x0^2 + t/2)*y0 - (alpha + 1/2)*x0')
        assert recovered.H.evaluate({'x0': 0, 'y0': 0, 't': 0.7, 'alpha': 0.3}) == 0

    @pytest.mark.parametrize('chart', ['U0', 'U1', 'U2'])
    def test_e7_recovered_matches_shipped(self, e7, chart):
        c = e7.chart(chart)
        recovered = recover_hamiltonian(e7.coboundary[chart], c)
        assert same_modulo_time(recovered.H, e7.hamiltonians[chart].H, c)
        assert recovered.H.evaluate({c.x_var: 0, c.y_var: 0, 't': 1.5, 'alpha': -0.25}) == 0

    def test_not_closed(self, e7):
        bad = ChartVectorField('U0', _p(e7, 'x0'), _p(e7, '0'))
        with pytest.raises(NotClosedError) as info:
            recover_hamiltonian(bad, e7.chart('U0'))
        assert info.value.chart == 'U0'

    def test_unsupported_density(self, d8):
        with pytest.raises(UnsupportedDensityError):
            recover_hamiltonian(d8.coboundary['U0'], d8.chart('U0'))

    def test_non_polynomial_field(self, e7):
        field = ChartVectorField('U0', _p(e7, '1/x0'), _p(e7, '0'))
        with pytest.raises(NonPolynomialFieldError):
            recover_hamiltonian(field, e7.chart('U0'))


class TestSigns:
    def test_e7_uses_the_primary_sign(self, e7):
        signs = HamiltonianController(e7).signs(e7.coboundary)
        assert signs == {'U0': PRIMARY_SIGN, 'U1': PRIMARY_SIGN, 'U2': PRIMARY_SIGN}

    def test_d8_shipped_orientation(self, d8):
        assert HamiltonianController(d8).signs(d8.coboundary) == {'U0': 1, 'U1': 1}
        assert HamiltonianController(d8).signs(d8.coboundary.negated()) == {'U0': -1, 'U1': -1}

    def test_wrong_hamiltonian(self, e7):
        wrong = HamiltonianDef('U0', _p(e7, 'x0*y0'))
        result = verify_hamiltonian(wrong, e7.coboundary['U0'], e7.density('U0'), e7.chart('U0'))
        assert not result.passed
        assert result.sign is None
        assert result.residual.startswith('dx: ')


class TestFundamental:
    @pytest.mark.parametrize('chart', ['U0', 'U1', 'U2'])
    def test_d8_charts(self, d8, chart):
        c = d8.chart(chart)
        assert fundamental_check(c, d8.density(chart), d8.coboundary[chart], 't').passed

    def test_e7_report(self, e7):
        report = HamiltonianController(e7).fundamental_report(e7.coboundary)
        assert report.passed
        assert len(report.results) == 3

    def test_broken_field_fails(self, d8):
        c = d8.chart('U0')
        vf = d8.coboundary['U0']
        bumped = ChartVectorField('U0', vf.eta + _p(d8, 'x0'), vf.zeta)
        result = fundamental_check(c, d8.density('U0'), bumped, 't')
        assert not result.passed
        assert result.residual

    def test_hamiltonian_report(self, e7, d8):
        assert HamiltonianController(e7).hamiltonian_report(e7.coboundary).passed
        assert HamiltonianController(d8).hamiltonian_report(d8.coboundary).passed


class TestVectorField:
    def test_e7_chart_zero(self, e7):
        c = e7.chart('U0')
        field = hamiltonian_vector_field(e7.hamiltonians['U0'].H, e7.density('U0'), c)
        dx, dy = ode_system(e7.coboundary)['U0']
        assert field[0] == dx
        assert field[1] == dy

    def test_d8_chart_zero_both_orientations(self, d8):
        c = d8.chart('U0')
        H = d8.hamiltonians['U0'].H
        shipped = hamiltonian_vector_field(H, d8.density('U0'), c, sign=1)
        assert shipped == ode_system(d8.coboundary)['U0']
        printed = hamiltonian_vector_field(H, d8.density('U0'), c)
        assert printed[0] == _p(d8, 'y0*(1/t - 1/y0^2)')
        assert printed == ode_system(d8.coboundary.negated())['U0']

    def test_contraction(self, e7):
        w = contract(e7.coboundary['U0'], e7.density('U0'))
        assert w.b == e7.coboundary['U0'].eta
        assert w.a == -e7.coboundary['U0'].zeta

    def test_bad_sign(self, e7):
        with pytest.raises(ValueError):
            hamiltonian_vector_field(e7.hamiltonians['U0'].H, e7.density('U0'), e7.chart('U0'), sign=2)
