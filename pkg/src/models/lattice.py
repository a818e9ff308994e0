"""
Lattice Model
-------------
Intersection matrices of anti-canonical configurations and the catalog of
affine root types, with Kodaira notation, marks and Painleve tags.

Vertex orders follow the configuration diagrams: the long chain first, then
the branch nodes.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import MatrixFormatError, UnknownLabelError


@dataclass(frozen=True, eq=False)
class IntersectionMatrix:
    """Symmetric integer matrix of the pairings Y_i . Y_j."""

    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n == 0:
            raise MatrixFormatError("intersection matrix is empty")
        for row in self.entries:
            if len(row) != n:
                raise MatrixFormatError(f"intersection matrix is not square ({n} rows, a row of {len(row)})")
            for v in row:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise MatrixFormatError(f"entry {v!r} is not an integer")
        for i in range(n):
            for j in range(i + 1, n):
                if self.entries[i][j] != self.entries[j][i]:
                    raise MatrixFormatError(f"intersection matrix is not symmetric at ({i}, {j})")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> 'IntersectionMatrix':
        out = []
        for row in rows:
            out.append(tuple(int(v) if isinstance(v, np.integer) else v for v in row))
        return cls(tuple(out))

    @classmethod
    def from_graph(cls, n: int, edges: Iterable[Tuple[int, int]], self_pairing: int = -2) -> 'IntersectionMatrix':
        """Diagonal self_pairing plus one unit per edge; repeated edges add up."""
        m = np.full((n, n), 0, dtype=np.int64)
        np.fill_diagonal(m, self_pairing)
        for a, b in edges:
            m[a, b] += 1
            m[b, a] += 1
        return cls.from_rows(m.tolist())

    @property
    def n(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def permuted(self, order: Sequence[int]) -> 'IntersectionMatrix':
        """Matrix with vertex order[k] moved to position k."""
        a = self.array()
        idx = np.asarray(order)
        return IntersectionMatrix.from_rows(a[np.ix_(idx, idx)].tolist())

    def degrees(self) -> List[int]:
        """Off-diagonal row sums, the weighted vertex degrees of the dual graph."""
        a = self.array()
        return (a.sum(axis=1) - np.diag(a)).tolist()

    def apply(self, vector: Sequence[int]) -> List[int]:
        return (self.array() @ np.asarray(vector, dtype=np.int64)).tolist()

    def to_dict(self) -> Dict[str, object]:
        return {'n': self.n, 'entries': [list(r) for r in self.entries]}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntersectionMatrix) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)


@dataclass(frozen=True, eq=False)
class RootType:
    """One affine root type of the anti-canonical divisor."""

    label: str
    kodaira: str
    marks: Tuple[int, ...]
    matrix: IntersectionMatrix
    painleve: Optional[str] = None

    @property
    def r(self) -> int:
        return len(self.marks)

    @property
    def kodaira_class(self) -> str:
        """additive, multiplicative or elliptic, after the kind of the fibre."""
        if self.kodaira == 'I0':
            return 'elliptic'
        if self.kodaira.startswith('I') and not self.kodaira.endswith('*'):
            return 'multiplicative'
        return 'additive'


def _chain(n: int) -> List[Tuple[int, int]]:
    return [(k, k + 1) for k in range(n - 1)]


def _e_type(label: str, kodaira: str, chain: Sequence[int], branches: Sequence[Tuple[int, int]],
            painleve: str) -> RootType:
    """chain marks, then branch nodes given as (mark, attached vertex)."""
    marks = list(chain)
    edges = _chain(len(chain))
    for mark, at in branches:
        marks.append(mark)
        edges.append((at, len(marks) - 1))
    return RootType(label, kodaira, tuple(marks), IntersectionMatrix.from_graph(len(marks), edges), painleve)


def _d_type(n: int, painleve: str) -> RootType:
    """Two leaves, an internal chain of n - 3 nodes, two leaves."""
    internal = n - 3
    r = n + 1
    edges = [(0, 2), (1, 2)]
    edges += [(2 + k, 3 + k) for k in range(internal - 1)]
    last = 2 + internal - 1
    edges += [(last, r - 2), (last, r - 1)]
    marks = (1, 1) + (2,) * internal + (1, 1)
    kodaira = f"I{n - 4}*"
    return RootType(f"D{n}~", kodaira, marks, IntersectionMatrix.from_graph(r, edges), painleve)


def _a_type(r: int) -> RootType:
    """Cycle of r nodes; r = 2 gives the doubled edge."""
    if r == 2:
        edges = [(0, 1), (0, 1)]
    else:
        edges = _chain(r) + [(r - 1, 0)]
    return RootType(f"A{r - 1}~", f"I{r}", (1,) * r, IntersectionMatrix.from_graph(r, edges))


def _build_catalog() -> Dict[str, RootType]:
    types = [
        _e_type("E8~", "II*", (1, 2, 3, 4, 5, 6, 4, 2), [(3, 5)], "P_I"),
        _d_type(8, "P_III^D8"),
        _e_type("E7~", "III*", (1, 2, 3, 4, 3, 2, 1), [(2, 3)], "P_II"),
        _d_type(7, "P_III^D7"),
        _d_type(6, "P_III^D6"),
        _e_type("E6~", "IV*", (1, 2, 3, 2, 1), [(2, 2), (1, 5)], "P_IV"),
        _d_type(5, "P_V"),
        _d_type(4, "P_VI"),
    ]
    types += [_a_type(r) for r in range(9, 1, -1)]
    types.append(RootType("A0~", "I0", (1,), IntersectionMatrix(((0,),))))
    types.append(RootType("A0*~", "I1", (1,), IntersectionMatrix(((0,),))))
    return {t.label: t for t in types}


CATALOG: Dict[str, RootType] = _build_catalog()


def normalize_label(label: str) -> str:
    key = label.strip().upper()
    if not key.endswith('~'):
        key += '~'
    return key


def root_type(label: str) -> RootType:
    try:
        return CATALOG[normalize_label(label)]
    except KeyError:
        raise UnknownLabelError(
            f"unknown root type {label!r}; known types are {', '.join(CATALOG)}"
        ) from None


def builtin_matrix(label: str) -> Tuple[IntersectionMatrix, RootType]:
    t = root_type(label)
    return t.matrix, t
