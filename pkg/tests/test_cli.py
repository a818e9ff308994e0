"""End-to-end runs of the okapair command line."""

import os
import re

import orjson
import pandas as pd
import pytest

from okapair import main, parse_complex, parse_path
from src.controllers.atlas_controller import builtin_atlas
from src.models.lattice import root_type
from src.utils.atlas_dsl import BUILTIN_DIR, dump_atlas


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    """Run every command from an empty directory so no config file or log file is picked up."""
    monkeypatch.chdir(tmp_path)
    for name in [n for n in os.environ if n.startswith('OKAPAIR_')]:
        monkeypatch.delenv(name)
    return tmp_path


def _stdout(capsys) -> str:
    return capsys.readouterr().out


def test_argument_parsers():
    assert parse_complex('1.5') == 1.5
    assert parse_complex('0,-2') == -2j
    assert parse_path('0;1,1;2') == [0, 1 + 1j, 2]


class TestVerify:
    def test_e7(self, capsys):
        assert main(['verify', '--atlas', 'e7']) == 0
        assert 'all identities hold' in _stdout(capsys)

    def test_json_report(self, capsys):
        assert main(['verify', '--atlas', 'e7', '--json']) == 0
        data = orjson.loads(_stdout(capsys))
        assert data['passed'] is True
        assert data['summary']['failed'] == 0

    def test_report_file(self, workdir):
        assert main(['verify', '--atlas', 'e7', '--out', 'reports/e7.json']) == 0
        data = orjson.loads((workdir / 'reports' / 'e7.json').read_bytes())
        assert data['title'] == 'atlas E7'

    def test_broken_atlas_fails(self, workdir, capsys):
        text = re.sub(r'(transition U2 -> U0 \{ x0 = [^;]*; y0 = )', r'\1t + ', dump_atlas(builtin_atlas('E7')))
        (workdir / 'broken.atlas').write_text(text, encoding='utf-8')
        assert main(['verify', '--file', 'broken.atlas']) == 1
        out = _stdout(capsys)
        assert 'FAIL' in out
        assert 'residual:' in out

    def test_syntax_error_is_a_usage_error(self, workdir, capsys):
        (workdir / 'bad.atlas').write_text('atlas bad\ntimevar t\nchart A vars a\n', encoding='utf-8')
        assert main(['verify', '--file', 'bad.atlas']) == 2
        assert 'line 3' in capsys.readouterr().err

    def test_division_by_zero_is_a_usage_error(self, workdir, capsys):
        source = (BUILTIN_DIR / 'e7.atlas').read_text(encoding='utf-8')
        text = source.replace('x0 = 1/x1 ;', 'x0 = 1/(x1 - x1) ;', 1)
        assert text != source
        (workdir / 'zero.atlas').write_text(text, encoding='utf-8')
        assert main(['verify', '--file', 'zero.atlas']) == 2
        assert 'undefined' in capsys.readouterr().err

    def test_needs_one_source(self, capsys):
        assert main(['verify']) == 2
        assert main(['verify', '--atlas', 'e7', '--file', 'x.atlas']) == 2

    @pytest.mark.slow
    def test_d8(self, capsys):
        assert main(['verify', '--atlas', 'd8']) == 0


class TestIntegrate:
    ARGS = ['integrate', '--atlas', 'e7', '--param', 'alpha=0', '--chart', 'U0']

    def test_exact_solution(self, capsys):
        assert main(self.ARGS + ['--x0', '0', '--y0', '0', '--t0', '0', '--t1', '10', '--json']) == 0
        data = orjson.loads(_stdout(capsys))
        x, y = data['samples'][-1]['x'], data['samples'][-1]['y']
        assert abs(complex(*x)) <= 1e-9
        assert abs(complex(*y) - 5) <= 1e-9
        assert data['params'] == {'alpha': 0.0}

    def test_summary(self, capsys):
        assert main(self.ARGS + ['--t1', '1']) == 0
        out = _stdout(capsys)
        assert 'integration completed' in out
        assert 'final: chart U0, t=1,' in out

    def test_zero_length_path(self, capsys):
        assert main(self.ARGS + ['--x0', '1', '--t0', '2', '--t1', '2', '--json']) == 0
        data = orjson.loads(_stdout(capsys))
        assert len(data['samples']) == 1
        assert data['samples'][0]['x'] == [1.0, 0.0]

    def test_complex_path_to_csv(self, workdir):
        args = self.ARGS + ['--path', '0;0,1;1,1', '--out', 'traj.csv', '--format', 'csv']
        assert main(args) == 0
        frame = pd.read_csv(workdir / 'traj.csv')
        assert list(frame.columns) == ['t_re', 't_im', 'chart', 'x_re', 'x_im', 'y_re', 'y_im', 'h', 'err']
        assert frame['t_re'].iloc[-1] == pytest.approx(1.0)
        assert frame['t_im'].iloc[-1] == pytest.approx(1.0)
        assert set(frame['chart']) == {'U0'}
        assert frame['y_im'].iloc[-1] == pytest.approx(0.5, abs=1e-9)

    def test_json_trajectory_file(self, workdir):
        assert main(self.ARGS + ['--t1', '1', '--out', 'traj.json']) == 0
        data = orjson.loads((workdir / 'traj.json').read_bytes())
        assert data['atlas'] == 'E7'
        assert data['switches'] == []

    def test_pole_at_start(self, capsys):
        args = ['integrate', '--atlas', 'd8', '--x0', '0.5', '--y0', '0', '--t0', '1', '--t1', '2']
        assert main(args) == 1
        assert 'not pole-free' in capsys.readouterr().err

    def test_missing_parameter(self):
        assert main(['integrate', '--atlas', 'e7', '--t1', '1']) == 2

    @pytest.mark.parametrize('bad', [
        ['--x0', 'abc', '--t1', '1'],
        ['--rtol', '-1', '--t1', '1'],
        ['--switching', 'sometimes', '--t1', '1'],
        [],
    ])
    def test_malformed_arguments(self, bad):
        assert main(self.ARGS + bad) == 2


class TestEliminate:
    def test_p2(self, capsys):
        assert main(['eliminate', '--system', 'II']) == 0
        assert "match: x'' = 2*x^3 + t*x + alpha" in _stdout(capsys)

    def test_p3_mismatch(self, capsys):
        assert main(['eliminate', '--system', 'P_III']) == 1
        assert 'residual:' in _stdout(capsys)

    def test_reduction(self, capsys):
        assert main(['eliminate', '--reduction', 'E7_U0']) == 0
        assert 'derived:' in _stdout(capsys)

    def test_unknown_system(self):
        assert main(['eliminate', '--system', 'VII']) == 2


class TestClassify:
    def test_e7_file(self, workdir, capsys):
        (workdir / 'e7.json').write_bytes(orjson.dumps(root_type('E7~').matrix.to_dict()))
        assert main(['classify', '--file', 'e7.json']) == 0
        assert 'E7~, Kodaira III*, r=8, dim=2' in _stdout(capsys)

    def test_type_label_json(self, capsys):
        assert main(['classify', '--type', 'D8~', '--json']) == 0
        data = orjson.loads(_stdout(capsys))
        assert data['marks'] == [1, 1, 2, 2, 2, 2, 2, 1, 1]
        assert data['painleve'] == 'P_III^D8'

    def test_unrecognized(self, workdir, capsys):
        (workdir / 'a3.json').write_text('[[-2, 1, 0], [1, -2, 1], [0, 1, -2]]', encoding='utf-8')
        assert main(['classify', '--file', 'a3.json']) == 1
        assert 'unrecognized, n=3' in _stdout(capsys)

    @pytest.mark.parametrize('content', ['{"n": 2, "entries": [[-2, 2]', '{"n": 2, "entries": [[-2, 1], [0, -2]]}'])
    def test_malformed(self, workdir, content):
        (workdir / 'm.json').write_text(content, encoding='utf-8')
        assert main(['classify', '--file', 'm.json']) == 2

    def test_unknown_label(self):
        assert main(['classify', '--type', 'F4~']) == 2


def test_tables(capsys):
    assert main(['tables']) == 0
    out = _stdout(capsys)
    assert 'P_III^D8' in out
    assert 'Okamoto-Painleve pairs' in out


def test_tables_json(capsys):
    assert main(['tables', '--json']) == 0
    data = orjson.loads(_stdout(capsys))
    assert len(data['Okamoto-Painleve pairs']) == 8


def test_version(capsys):
    assert main(['--version']) == 0
    assert 'okapair' in _stdout(capsys)
