"""
Kodaira-Spencer Controller
--------------------------
Computes the t-direction Kodaira-Spencer cocycle of an atlas and checks
cocycle identities, coboundary splittings and the gluing of the time-flow
fields. Also extracts the per-chart ODE system of a splitting.

Identities between fields living on different charts are compared after
pulling everything back to the source chart of the transition involved, so
only one substitution is needed per check.
"""

from itertools import permutations
from typing import Dict, Optional, Tuple

from loguru import logger

from src.controllers.atlas_controller import jacobian
from src.models.atlas import Atlas, Transition
from src.models.fields import CechCocycle, ChartVectorField, Coboundary
from src.models.ratfunc import RatFunc
from src.models.report import CheckResult, VerificationReport
from src.utils.errors import AtlasError, SubstitutionPoleError

Components = Tuple[RatFunc, RatFunc]


def pushforward_vf(atlas: Atlas, vf: ChartVectorField, tr: Transition) -> ChartVectorField:
    """Push a field through tr; the result is written in the target chart's coordinates."""
    if vf.chart != tr.source:
        raise AtlasError(f"field on {vf.chart} cannot be pushed through {tr.source} -> {tr.target}")
    if tr.source == tr.target:
        return vf
    eta, zeta = jacobian(atlas, tr).apply(vf.eta, vf.zeta)
    back = atlas.assignment(atlas.inverse(tr))
    return ChartVectorField(
        tr.target,
        atlas.simplify(atlas.simplify(eta).subst(back)),
        atlas.simplify(atlas.simplify(zeta).subst(back)),
    )


def transport(atlas: Atlas, vf: ChartVectorField, chart_id: str) -> ChartVectorField:
    return pushforward_vf(atlas, vf, atlas.transition(vf.chart, chart_id))


def ode_system(b: Coboundary) -> Dict[str, Components]:
    """Right-hand sides (dx/dt, dy/dt) = (-eta_i, -zeta_i) per chart."""
    return {cid: (-vf.eta, -vf.zeta) for cid, vf in b.fields.items()}


def _components_check(name: str, atlas: Atlas, residual: Components,
                      detail: Optional[str] = None) -> CheckResult:
    parts = [atlas.simplify(r) for r in residual]
    if all(p.is_zero() for p in parts):
        return CheckResult(name=name, passed=True, detail=detail)
    return CheckResult(
        name=name,
        passed=False,
        residual=f"d/dx: {parts[0]} ; d/dy: {parts[1]}",
        detail=detail,
    )


class KodairaSpencerController:
    """Handles the cocycle, coboundary and gluing computations on one atlas."""

    def __init__(self, atlas: Atlas):
        self.atlas = atlas

    def ks_cocycle(self) -> CechCocycle:
        """Entry (i, j) is the t-derivative of transition j -> i, rewritten in chart i."""
        atlas = self.atlas
        entries: Dict[Tuple[str, str], ChartVectorField] = {}
        pulled: Dict[Tuple[str, str], Components] = {}
        for (j, i), tr in atlas.transitions.items():
            dx = atlas.simplify(tr.x_expr.diff(atlas.timevar))
            dy = atlas.simplify(tr.y_expr.diff(atlas.timevar))
            pulled[(i, j)] = (dx, dy)
            back = atlas.assignment(atlas.transition(i, j))
            entries[(i, j)] = ChartVectorField(
                i, atlas.simplify(dx.subst(back)), atlas.simplify(dy.subst(back))
            )
        logger.debug(f"atlas {atlas.name}: cocycle with {len(entries)} entries")
        return CechCocycle(entries, pulled)

    def zero_cocycle(self) -> CechCocycle:
        atlas = self.atlas
        zero = RatFunc.zero(atlas.vars)
        entries = {(i, j): atlas.zero_field(i) for (j, i) in atlas.transitions}
        return CechCocycle(entries, {pair: (zero, zero) for pair in entries})

    def _pulled(self, c: CechCocycle, i: str, j: str) -> Components:
        """Entry (i, j) with coefficients in chart j coordinates."""
        if (i, j) in c.pulled:
            return c.pulled[(i, j)]
        atlas = self.atlas
        entry = c[(i, j)]
        a = atlas.assignment(atlas.transition(j, i))
        return atlas.simplify(entry.eta.subst(a)), atlas.simplify(entry.zeta.subst(a))

    def verify_cocycle(self, c: CechCocycle) -> VerificationReport:
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} cocycle identities")
        for (i, j) in c.pairs():
            if (j, i) not in c:
                continue
            # theta_ji = -push_j(theta_ij), read in chart i coordinates
            entry = c[(i, j)]
            name = f"antisymmetry ({i},{j})"
            try:
                e, z = jacobian(atlas, atlas.transition(i, j)).apply(entry.eta, entry.zeta)
                back = self._pulled(c, j, i)
            except SubstitutionPoleError as exc:
                report.add(CheckResult(name=name, passed=False, detail=str(exc)))
                continue
            report.add(_components_check(name, atlas, (e + back[0], z + back[1])))
        for i, j, k in permutations(atlas.chart_ids, 3):
            if not all(p in c for p in ((i, j), (j, k), (i, k))):
                continue
            report.add(self._triple(c, i, j, k))
        logger.info(f"atlas {atlas.name} cocycle: {report.summary()}")
        return report

    def _triple(self, c: CechCocycle, i: str, j: str, k: str) -> CheckResult:
        """theta_ik = theta_ij + push_i(theta_jk), pulled back to chart k."""
        atlas = self.atlas
        name = f"triple ({i},{j},{k})"
        try:
            a = atlas.assignment(atlas.transition(k, j))
            ij = [f.subst(a) for f in self._pulled(c, i, j)]
            (p, q), (r, s) = jacobian(atlas, atlas.transition(j, i)).matrix
            p, q, r, s = (atlas.simplify(f).subst(a) for f in (p, q, r, s))
            w_eta, w_zeta = self._pulled(c, j, k)
            ik = self._pulled(c, i, k)
        except SubstitutionPoleError as exc:
            return CheckResult(name=name, passed=False, detail=str(exc))
        residual = (
            ik[0] - ij[0] - (p * w_eta + q * w_zeta),
            ik[1] - ij[1] - (r * w_eta + s * w_zeta),
        )
        return _components_check(name, atlas, residual)

    def verify_coboundary(self, c: CechCocycle, b: Coboundary) -> VerificationReport:
        """theta_ij = theta_j - theta_i for every pair, compared in chart j coordinates."""
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} coboundary splitting")
        missing = [cid for cid in atlas.chart_ids if cid not in b]
        for cid in missing:
            report.add(CheckResult(name=f"coboundary field {cid}", passed=False,
                                   detail="no field given for this chart"))
        if missing:
            return report
        for (i, j) in c.pairs():
            name = f"coboundary ({i},{j})"
            try:
                pushed, pulled_i = self._split_terms(b, j, i)
                entry = self._pulled(c, i, j)
            except SubstitutionPoleError as exc:
                report.add(CheckResult(name=name, passed=False, detail=str(exc)))
                continue
            residual = (
                pushed[0] - pulled_i[0] - entry[0],
                pushed[1] - pulled_i[1] - entry[1],
            )
            report.add(_components_check(name, atlas, residual))
        logger.info(f"atlas {atlas.name} coboundary: {report.summary()}")
        return report

    def _split_terms(self, b: Coboundary, j: str, i: str) -> Tuple[Components, Components]:
        """J(j -> i) theta_j and theta_i pulled back to chart j."""
        atlas = self.atlas
        tr = atlas.transition(j, i)
        pushed = jacobian(atlas, tr).apply(b[j].eta, b[j].zeta)
        a = atlas.assignment(tr)
        pulled_i = (b[i].eta.subst(a), b[i].zeta.subst(a))
        return pushed, pulled_i

    def verify_gluing(self, b: Coboundary) -> VerificationReport:
        """Pulling d/dt - theta_i back through each transition j -> i gives d/dt - theta_j.

        The differential of (x_j, y_j, t) -> (x_i, y_i, t) is inverted through
        its adjugate, so the identity checked in chart j is
        adj(J) (theta_i + dt(transition)) = det(J) theta_j.
        """
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} time-flow gluing")
        for (j, i), tr in atlas.transitions.items():
            name = f"gluing {j}->{i}"
            if j not in b or i not in b:
                report.add(CheckResult(name=name, passed=False, detail="coboundary incomplete"))
                continue
            jac = jacobian(atlas, tr)
            det = atlas.simplify(jac.det)
            if det.is_zero():
                report.add(CheckResult(name=name, passed=False, detail="degenerate transition"))
                continue
            try:
                a = atlas.assignment(tr)
                gx = atlas.simplify(b[i].eta.subst(a) + tr.x_expr.diff(atlas.timevar))
                gy = atlas.simplify(b[i].zeta.subst(a) + tr.y_expr.diff(atlas.timevar))
            except SubstitutionPoleError as exc:
                report.add(CheckResult(name=name, passed=False, detail=str(exc)))
                continue
            (p, q), (r, s) = (tuple(atlas.simplify(f) for f in row) for row in jac.matrix)
            residual = (
                s * gx - q * gy - det * b[j].eta,
                p * gy - r * gx - det * b[j].zeta,
            )
            report.add(_components_check(name, atlas, residual))
        return report
