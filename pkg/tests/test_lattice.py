"""Intersection matrices, kernels and the root type catalog."""

import orjson
import pytest

from src.controllers.lattice_controller import (
    LatticeController,
    classify,
    classify_all,
    deformation_dim,
    is_negative_semidefinite,
    kernel,
    load_matrix,
    parse_matrix,
    rank,
    shuffled,
)
from src.models.lattice import CATALOG, IntersectionMatrix, builtin_matrix, root_type
from src.utils.errors import MatrixFormatError, UnknownLabelError

PAIRS = {
    'E8~': ('II*', 'P_I'),
    'D8~': ('I4*', 'P_III^D8'),
    'E7~': ('III*', 'P_II'),
    'D7~': ('I3*', 'P_III^D7'),
    'D6~': ('I2*', 'P_III^D6'),
    'E6~': ('IV*', 'P_IV'),
    'D5~': ('I1*', 'P_V'),
    'D4~': ('I0*', 'P_VI'),
}


def test_marks_span_the_kernel():
    assert kernel(root_type('E7~').matrix) == [(1, 2, 3, 4, 3, 2, 1, 2)]
    assert kernel(root_type('D8~').matrix) == [(1, 1, 2, 2, 2, 2, 2, 1, 1)]
    assert kernel(root_type('E8~').matrix) == [(1, 2, 3, 4, 5, 6, 4, 2, 3)]


@pytest.mark.parametrize('label', list(CATALOG))
def test_catalog_type(label):
    report = LatticeController().check_type(label)
    assert report.passed, report.failures
    t = root_type(label)
    assert deformation_dim(t) == 10 - t.r
    assert rank(t.matrix) == t.r - 1


@pytest.mark.parametrize('label, expected', PAIRS.items())
def test_painleve_pairs(label, expected):
    t = root_type(label)
    assert (t.kodaira, t.painleve) == expected
    assert t.kodaira_class == 'additive'


def test_label_forms():
    assert root_type('e7') is root_type('E7~')
    with pytest.raises(UnknownLabelError):
        root_type('F4~')


def test_kodaira_classes():
    assert root_type('A0~').kodaira_class == 'elliptic'
    assert root_type('A0*~').kodaira_class == 'multiplicative'
    assert root_type('A8~').kodaira == 'I9'
    assert root_type('A1~').matrix.entries == ((-2, 2), (2, -2))


@pytest.mark.parametrize('label', list(CATALOG))
def test_classification_ignores_vertex_order(label, rng):
    t = root_type(label)
    for _ in range(100):
        m, order = shuffled(t.matrix, rng)
        assert t.label in [found.label for found in classify_all(m)]
        assert kernel(m) == [tuple(t.marks[k] for k in order)]


def test_rank_zero_types_are_ambiguous():
    m = IntersectionMatrix(((0,),))
    assert classify(m).label == 'A0~'
    assert [t.label for t in classify_all(m)] == ['A0~', 'A0*~']


def test_unrecognized():
    m = IntersectionMatrix.from_graph(3, [(0, 1), (1, 2)])
    assert classify(m) is None
    assert LatticeController().describe(m) == {'n': 3, 'kernel': [], 'type': 'unrecognized'}


def test_semidefiniteness():
    assert is_negative_semidefinite(root_type('E6~').matrix)
    assert not is_negative_semidefinite(IntersectionMatrix(((1, 0), (0, -2))))


def test_describe_e7():
    desc = LatticeController().describe(root_type('E7~').matrix)
    assert desc['type'] == 'E7~'
    assert desc['kodaira'] == 'III*'
    assert (desc['r'], desc['dim']) == (8, 2)
    assert desc['painleve'] == 'P_II'
    assert desc['alternatives'] == []


class TestParsing:
    def test_object_and_bare_rows(self):
        rows = [[-2, 2], [2, -2]]
        assert parse_matrix({'n': 2, 'entries': rows}) == parse_matrix(rows)

    @pytest.mark.parametrize('data, message', [
        ({'n': 2}, 'entries'),
        ({'n': 3, 'entries': [[-2, 2], [2, -2]]}, 'declared n=3'),
        ({'entries': [[-2, 1], [0, -2]]}, 'not symmetric'),
        ({'entries': [[-2, 1]]}, 'not square'),
        ({'entries': [[-2.5]]}, 'not an integer'),
        ({'entries': []}, 'empty'),
        ({'entries': 'nope'}, 'list of rows'),
    ])
    def test_malformed(self, data, message):
        with pytest.raises(MatrixFormatError, match=message):
            parse_matrix(data)

    def test_load_file(self, tmp_path):
        path = tmp_path / 'e7.json'
        path.write_bytes(orjson.dumps(root_type('E7~').matrix.to_dict()))
        assert classify(load_matrix(path)).label == 'E7~'

    def test_bad_json(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"n": 2, "entries": [[-2, 2]', encoding='utf-8')
        with pytest.raises(MatrixFormatError, match='not valid JSON'):
            load_matrix(path)
        with pytest.raises(MatrixFormatError, match='cannot read'):
            load_matrix(tmp_path / 'absent.json')


def test_tables():
    tables = LatticeController().tables()
    pairs = tables['Okamoto-Painleve pairs']
    assert [row['type'] for row in pairs] == list(PAIRS)
    assert {'type': 'D8~', 'kodaira': 'I4*', 'r': 9, 'painleve': 'P_III^D8'} in pairs
    generalized = tables['generalized pairs, normal crossing divisor']
    assert len(generalized) == len(CATALOG)
    dims = {row['type']: row['dim'] for row in tables['deformation dimension 10 - r']}
    assert dims['E8~'] == 1
    assert dims['A0~'] == 9


def test_builtin_matrix():
    m, t = builtin_matrix('E7~')
    assert (t.r, t.marks) == (8, (1, 2, 3, 4, 3, 2, 1, 2))
    assert all(m.entries[i][i] == -2 for i in range(8))
    m, t = builtin_matrix('A0~')
    assert (m.entries, t.r) == (((0,),), 1)


def test_catalog_report():
    report = LatticeController().check_catalog()
    assert report.passed
    assert len(report.results) >= len(CATALOG)
