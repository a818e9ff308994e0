"""
Lattice Controller
------------------
Exact linear algebra on intersection matrices: rational kernels, rank and
semidefiniteness, classification against the catalog of affine root types,
and the deformation dimension 10 - r.
"""

import math
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson
from loguru import logger

from src.models.lattice import CATALOG, IntersectionMatrix, RootType, root_type
from src.models.report import CheckResult, VerificationReport
from src.utils.errors import MatrixFormatError

Vector = Tuple[int, ...]


def _rref(rows: List[List[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form over Q and the pivot columns."""
    m = [list(r) for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    pivots: List[int] = []
    row = 0
    for col in range(n_cols):
        pivot = next((r for r in range(row, n_rows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        lead = m[row][col]
        m[row] = [v / lead for v in m[row]]
        for r in range(n_rows):
            if r != row and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == n_rows:
            break
    return m, pivots


def _primitive(vector: Sequence[Fraction]) -> Vector:
    """Scale to coprime integers with a positive first nonzero entry."""
    scale = math.lcm(*(v.denominator for v in vector))
    ints = [int(v * scale) for v in vector]
    g = math.gcd(*ints)
    ints = [v // g for v in ints]
    first = next(v for v in ints if v)
    if first < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def kernel(m: IntersectionMatrix) -> List[Vector]:
    """Basis of the rational null space as primitive integer vectors."""
    rows = [[Fraction(v) for v in row] for row in m.entries]
    reduced, pivots = _rref(rows)
    free = [c for c in range(m.n) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * m.n
        vec[f] = Fraction(1)
        for r, p in enumerate(pivots):
            vec[p] = -reduced[r][f]
        basis.append(_primitive(vec))
    return basis


def rank(m: IntersectionMatrix) -> int:
    _, pivots = _rref([[Fraction(v) for v in row] for row in m.entries])
    return len(pivots)


def _det(rows: List[List[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor:
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return det


def is_negative_semidefinite(m: IntersectionMatrix) -> bool:
    """All principal minors of -m are nonnegative."""
    neg = [[Fraction(-v) for v in row] for row in m.entries]
    for size in range(1, m.n + 1):
        for idx in combinations(range(m.n), size):
            sub = [[neg[i][j] for j in idx] for i in idx]
            if _det(sub) < 0:
                return False
    return True


def deformation_dim(t: RootType) -> int:
    return 10 - t.r


def _matches(candidate: IntersectionMatrix, model: IntersectionMatrix) -> bool:
    """Backtracking search for a vertex bijection carrying candidate onto model."""
    if candidate.n != model.n:
        return False
    c = candidate.entries
    mm = model.entries
    n = model.n
    c_deg = candidate.degrees()
    m_deg = model.degrees()
    if sorted(zip(c_deg, (c[i][i] for i in range(n)))) != sorted(zip(m_deg, (mm[i][i] for i in range(n)))):
        return False
    assignment: List[int] = []
    used = [False] * n

    def extend(k: int) -> bool:
        if k == n:
            return True
        for v in range(n):
            if used[v] or c_deg[v] != m_deg[k] or c[v][v] != mm[k][k]:
                continue
            if any(c[v][assignment[j]] != mm[k][j] for j in range(k)):
                continue
            used[v] = True
            assignment.append(v)
            if extend(k + 1):
                return True
            assignment.pop()
            used[v] = False
        return False

    return extend(0)


def classify_all(m: IntersectionMatrix) -> List[RootType]:
    """Every catalog type whose matrix matches m up to vertex order."""
    return [t for t in CATALOG.values() if _matches(m, t.matrix)]


def classify(m: IntersectionMatrix) -> Optional[RootType]:
    """First matching catalog type, or None when m is unrecognized.

    A0~ and A0*~ share the matrix (0); the first one wins here.
    """
    found = classify_all(m)
    if not found:
        logger.debug(f"unrecognized {m.n}x{m.n} intersection matrix")
        return None
    return found[0]


def shuffled(m: IntersectionMatrix, rng: np.random.Generator) -> Tuple[IntersectionMatrix, List[int]]:
    order = rng.permutation(m.n).tolist()
    return m.permuted(order), order


def parse_matrix(data: object) -> IntersectionMatrix:
    """Accept {"n": N, "entries": [[...], ...]} or a bare list of rows."""
    if isinstance(data, dict):
        if 'entries' not in data:
            raise MatrixFormatError("matrix object needs an 'entries' field")
        rows = data['entries']
        declared = data.get('n')
    else:
        rows = data
        declared = None
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise MatrixFormatError("entries must be a list of rows")
    m = IntersectionMatrix.from_rows(rows)
    if declared is not None and declared != m.n:
        raise MatrixFormatError(f"declared n={declared} but the matrix has {m.n} rows")
    return m


def load_matrix(path: Union[str, Path]) -> IntersectionMatrix:
    path = Path(path)
    try:
        data = orjson.loads(path.read_bytes())
    except OSError as exc:
        raise MatrixFormatError(f"cannot read matrix file {path}: {exc}") from exc
    except orjson.JSONDecodeError as exc:
        raise MatrixFormatError(f"{path} is not valid JSON: {exc}") from exc
    return parse_matrix(data)


class LatticeController:
    """Handles the per-type lattice checks over the catalog."""

    def check_type(self, label: str) -> VerificationReport:
        t = root_type(label)
        m = t.matrix
        report = VerificationReport(title=f"root type {t.label}")
        basis = kernel(m)
        report.add(CheckResult(
            name=f"{t.label} kernel spanned by marks",
            passed=basis == [t.marks],
            detail=f"kernel {basis}, marks {list(t.marks)}",
        ))
        image = m.apply(t.marks)
        report.add(CheckResult(name=f"{t.label} Y.Y_i = 0", passed=not any(image),
                               detail=f"M m = {image}"))
        self_pairing = int(np.dot(t.marks, image))
        report.add(CheckResult(name=f"{t.label} Y^2 = 0", passed=self_pairing == 0,
                               detail=f"m M m = {self_pairing}"))
        report.add(CheckResult(name=f"{t.label} negative semidefinite",
                               passed=is_negative_semidefinite(m)))
        report.add(CheckResult(name=f"{t.label} rank r-1", passed=rank(m) == t.r - 1,
                               detail=f"rank {rank(m)}, r {t.r}"))
        report.add(CheckResult(name=f"{t.label} classifies to itself",
                               passed=any(found.label == t.label for found in classify_all(m))))
        return report

    def check_catalog(self) -> VerificationReport:
        report = VerificationReport(title="affine root type catalog")
        for label in CATALOG:
            report.merge(self.check_type(label))
        return report

    def describe(self, m: IntersectionMatrix) -> Dict[str, object]:
        t = classify(m)
        out: Dict[str, object] = {'n': m.n, 'kernel': [list(v) for v in kernel(m)]}
        if t is None:
            out['type'] = 'unrecognized'
            return out
        out.update({
            'type': t.label,
            'kodaira': t.kodaira,
            'r': t.r,
            'dim': deformation_dim(t),
            'marks': list(t.marks),
            'painleve': t.painleve,
            'alternatives': [a.label for a in classify_all(m)[1:]],
        })
        return out

    def tables(self) -> Dict[str, List[Dict[str, object]]]:
        """Rows of the pair classification tables, in catalog order."""
        pairs = []
        generalized = []
        dims = []
        for t in CATALOG.values():
            row = {'type': t.label, 'kodaira': t.kodaira, 'r': t.r}
            generalized.append({**row, 'class': t.kodaira_class})
            dims.append({'type': t.label, 'dim': deformation_dim(t), 'painleve': t.painleve or '-'})
            if t.painleve is not None:
                pairs.append({**row, 'painleve': t.painleve})
        return {
            'Okamoto-Painleve pairs': pairs,
            'generalized pairs, normal crossing divisor': generalized,
            'deformation dimension 10 - r': dims,
        }
