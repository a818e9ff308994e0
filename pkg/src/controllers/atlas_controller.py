"""
Atlas Controller
----------------
Handles the built-in atlases and the geometric consistency checks on an
atlas: inverse pairs, triple compatibility and density pullbacks.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Dict, Optional, Tuple

from loguru import logger

from src.models.atlas import Atlas, Transition, TwoFormDensity
from src.models.ratfunc import RatFunc
from src.models.report import CheckResult, VerificationReport, identity_check
from src.utils.atlas_dsl import BUILTIN_DIR, load_atlas_file
from src.utils.errors import AtlasError, SubstitutionPoleError, UnknownAtlasError

BUILTIN_ATLASES = {
    'E7': 'e7.atlas',
    'D8': 'd8.atlas',
}


def builtin_atlas(name: str) -> Atlas:
    """Load one of the shipped atlases by name (case-insensitive)."""
    key = name.upper()
    if key not in BUILTIN_ATLASES:
        raise UnknownAtlasError(
            f"unknown atlas {name!r}; built-in atlases are {', '.join(BUILTIN_ATLASES)}"
        )
    return _load_builtin(key)


@lru_cache(maxsize=None)
def _load_builtin(key: str) -> Atlas:
    atlas = load_atlas_file(BUILTIN_DIR / BUILTIN_ATLASES[key])
    logger.debug(f"built-in atlas {key} ready")
    return atlas


@dataclass(frozen=True, eq=False)
class Jacobian:
    """Partials of a transition's images with respect to the source coordinates."""

    matrix: Tuple[Tuple[RatFunc, RatFunc], Tuple[RatFunc, RatFunc]]
    det: RatFunc

    def apply(self, eta: RatFunc, zeta: RatFunc) -> Tuple[RatFunc, RatFunc]:
        (a, b), (c, d) = self.matrix
        return a * eta + b * zeta, c * eta + d * zeta


def jacobian(atlas: Atlas, tr: Transition) -> Jacobian:
    source = atlas.chart(tr.source)
    x, y = source.coordinates
    matrix = (
        (tr.x_expr.diff(x), tr.x_expr.diff(y)),
        (tr.y_expr.diff(x), tr.y_expr.diff(y)),
    )
    (a, b), (c, d) = matrix
    return Jacobian(matrix, atlas.simplify(a * d - b * c))


def compose(atlas: Atlas, first: Transition, second: Transition) -> Tuple[RatFunc, RatFunc]:
    """Coordinates of second.target in terms of first.source, following first then second."""
    if first.target != second.source:
        raise AtlasError(f"cannot compose {first.source}->{first.target} "
                         f"with {second.source}->{second.target}")
    assignment = atlas.assignment(first)
    return second.x_expr.subst(assignment), second.y_expr.subst(assignment)


def pullback_density(atlas: Atlas, tr: Transition,
                     target_density: Optional[TwoFormDensity] = None) -> RatFunc:
    """Coefficient of the target chart's two-form written in source coordinates."""
    if target_density is None:
        target_density = atlas.density(tr.target)
    if target_density.chart != tr.target:
        raise AtlasError(
            f"density of chart {target_density.chart} cannot be pulled back through "
            f"{tr.source} -> {tr.target}"
        )
    g = target_density.value.subst(atlas.assignment(tr))
    return atlas.simplify(g * jacobian(atlas, tr).det)


class AtlasController:
    """Handles consistency checks over one atlas."""

    def __init__(self, atlas: Atlas):
        self.atlas = atlas

    def check_inverse_pair(self, i: str, j: str) -> VerificationReport:
        atlas = self.atlas
        report = VerificationReport(title=f"inverse pair {i} <-> {j}")
        for a, b in ((i, j), (j, i)):
            forward = atlas.transition(a, b)
            back = atlas.transition(b, a)
            chart = atlas.chart(a)
            try:
                xs, ys = compose(atlas, forward, back)
            except SubstitutionPoleError as exc:
                report.add(CheckResult(name=f"{a}->{b}->{a}", passed=False, detail=str(exc)))
                continue
            for var, image in ((chart.x_var, xs), (chart.y_var, ys)):
                residual = atlas.simplify(image - RatFunc.var(atlas.vars, var))
                report.add(identity_check(f"{a}->{b}->{a}: {var}", residual))
        return report

    def check_triple_compat(self, i: str, j: str, k: str) -> VerificationReport:
        """Going i -> j -> k must agree with the direct transition i -> k."""
        atlas = self.atlas
        report = VerificationReport(title=f"triple {i}, {j}, {k}")
        direct = atlas.transition(i, k)
        target = atlas.chart(k)
        try:
            xs, ys = compose(atlas, atlas.transition(i, j), atlas.transition(j, k))
        except SubstitutionPoleError as exc:
            report.add(CheckResult(name=f"{i}->{j}->{k}", passed=False, detail=str(exc)))
            return report
        for var, image, expected in ((target.x_var, xs, direct.x_expr),
                                     (target.y_var, ys, direct.y_expr)):
            residual = atlas.simplify(image - expected)
            report.add(identity_check(f"{i}->{j}->{k}: {var}", residual))
        return report

    def check_density_compat(self, tr: Transition) -> CheckResult:
        atlas = self.atlas
        name = f"density {tr.source}->{tr.target}"
        try:
            pulled = pullback_density(atlas, tr)
        except SubstitutionPoleError as exc:
            return CheckResult(name=name, passed=False, detail=str(exc))
        return identity_check(name, atlas.simplify(pulled - atlas.density(tr.source).value))

    def check_jacobian(self, tr: Transition) -> CheckResult:
        name = f"jacobian {tr.source}->{tr.target}"
        det = jacobian(self.atlas, tr).det
        if det.is_zero():
            return CheckResult(name=name, passed=False, detail="determinant vanishes identically")
        return CheckResult(name=name, passed=True, detail=f"det = {det}")

    def check_atlas(self) -> VerificationReport:
        """Every inverse pair and every chart triple with all transitions present."""
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} consistency")
        for i, j in combinations(atlas.chart_ids, 2):
            if atlas.has_transition(i, j):
                report.merge(self.check_inverse_pair(i, j))
        for i, j, k in permutations(atlas.chart_ids, 3):
            if all(atlas.has_transition(a, b) for a, b in ((i, j), (j, k), (i, k))):
                report.merge(self.check_triple_compat(i, j, k))
        for tr in atlas.transitions.values():
            report.add(self.check_jacobian(tr))
        logger.info(f"atlas {atlas.name}: {report.summary()}")
        return report

    def check_densities(self) -> VerificationReport:
        report = VerificationReport(title=f"atlas {self.atlas.name} density pullbacks")
        for tr in self.atlas.transitions.values():
            report.add(self.check_density_compat(tr))
        return report

    def determinants(self) -> Dict[Tuple[str, str], RatFunc]:
        return {pair: jacobian(self.atlas, tr).det for pair, tr in self.atlas.transitions.items()}
