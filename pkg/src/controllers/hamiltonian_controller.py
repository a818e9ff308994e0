"""
Hamiltonian Controller
----------------------
Relative differential-form calculus on a chart: contraction with the
symplectic density, the relative exterior derivative, the fundamental
equation, and recovery or verification of chart Hamiltonians.

Sign convention: d_pi H = -(theta . omega) is primary. verify_hamiltonian
tests both signs and reports the one that holds.
"""

from typing import Dict, Optional, Tuple

from loguru import logger

from src.models.atlas import Atlas, Chart, TwoFormDensity
from src.models.fields import ChartVectorField, Coboundary, HamiltonianDef, OneForm
from src.models.ratfunc import RatFunc
from src.models.report import CheckResult, VerificationReport, identity_check
from src.utils.errors import (
    AtlasError,
    NonPolynomialFieldError,
    NotClosedError,
    UnsupportedDensityError,
)

PRIMARY_SIGN = -1


def _same_chart(*ids: str) -> None:
    if len(set(ids)) != 1:
        raise AtlasError(f"objects live on different charts: {', '.join(ids)}")


def contract(vf: ChartVectorField, density: TwoFormDensity) -> OneForm:
    """theta . (g dx^dy) = -g zeta dx + g eta dy."""
    _same_chart(vf.chart, density.chart)
    g = density.value
    return OneForm(vf.chart, -(g * vf.zeta), g * vf.eta)


def d_pi(w: OneForm, chart: Chart) -> RatFunc:
    """Coefficient of dx^dy in the relative exterior derivative (t and parameters fixed)."""
    _same_chart(w.chart, chart.id)
    return w.b.diff(chart.x_var) - w.a.diff(chart.y_var)


def exterior(H: RatFunc, chart: Chart) -> OneForm:
    return OneForm(chart.id, H.diff(chart.x_var), H.diff(chart.y_var))


def fundamental_residual(chart: Chart, density: TwoFormDensity, vf: ChartVectorField,
                         timevar: str) -> RatFunc:
    return density.value.diff(timevar) - d_pi(contract(vf, density), chart)


def fundamental_check(chart: Chart, density: TwoFormDensity, vf: ChartVectorField,
                      timevar: str) -> CheckResult:
    """dt g - d_pi(theta . omega) must vanish on the chart."""
    _same_chart(chart.id, density.chart, vf.chart)
    residual = fundamental_residual(chart, density, vf, timevar)
    return identity_check(f"fundamental {chart.id}", residual.cancel([chart.denom]))


def recover_hamiltonian(vf: ChartVectorField, chart: Chart,
                        density: Optional[TwoFormDensity] = None) -> HamiltonianDef:
    """Integrate a closed polynomial field on a density-1 chart.

    H(x, y) = int_0^x zeta(s, 0) ds - int_0^y eta(x, s) ds, so dH/dx = zeta,
    dH/dy = -eta and H(0, 0) = 0.
    """
    _same_chart(vf.chart, chart.id)
    if density is None:
        density = TwoFormDensity.for_chart(chart)
    if not density.value.equals(RatFunc.one(density.value.vars)):
        raise UnsupportedDensityError(
            f"chart {chart.id}: recovery needs density dx^dy, got {density.value}"
        )
    if not (vf.eta.is_polynomial() and vf.zeta.is_polynomial()):
        raise NonPolynomialFieldError(f"chart {chart.id}: field coefficients are not polynomial")
    closed = d_pi(contract(vf, density), chart)
    if not closed.is_zero():
        raise NotClosedError(chart.id, str(closed))
    x, y = chart.coordinates
    eta = vf.eta.as_poly()
    zeta = vf.zeta.as_poly()
    H = zeta.at_zero(y).antiderivative(x) - eta.antiderivative(y)
    logger.debug(f"recovered H on {chart.id}: {H}")
    return HamiltonianDef(chart.id, RatFunc(H))


def verify_hamiltonian(H: HamiltonianDef, vf: ChartVectorField, density: TwoFormDensity,
                       chart: Chart) -> CheckResult:
    """Test d_pi H = sign * (theta . omega) for both signs and report the one that holds."""
    _same_chart(H.chart, vf.chart, density.chart, chart.id)
    dH = exterior(H.H, chart)
    w = contract(vf, density)
    name = f"hamiltonian {chart.id}"
    residuals = {}
    for sign in (PRIMARY_SIGN, -PRIMARY_SIGN):
        ra = (dH.a - w.a * sign).cancel([chart.denom])
        rb = (dH.b - w.b * sign).cancel([chart.denom])
        if ra.is_zero() and rb.is_zero():
            return CheckResult(name=name, passed=True, sign=sign,
                               detail=f"d_pi H = {'+' if sign > 0 else '-'}(theta . omega)")
        residuals[sign] = (ra, rb)
    ra, rb = residuals[PRIMARY_SIGN]
    return CheckResult(
        name=name,
        passed=False,
        residual=f"dx: {ra} ; dy: {rb}",
        detail="neither sign holds",
    )


def hamiltonian_vector_field(H: RatFunc, density: TwoFormDensity, chart: Chart,
                             sign: int = PRIMARY_SIGN) -> Tuple[RatFunc, RatFunc]:
    """(dx/dt, dy/dt) generated by H, given d_pi H = sign * (theta . omega).

    With the primary sign this is dx/dt = (1/g) dH/dy, dy/dt = -(1/g) dH/dx.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    g = density.value
    hx = H.diff(chart.x_var)
    hy = H.diff(chart.y_var)
    return (hy * (-sign) / g, hx * sign / g)


def same_modulo_time(a: RatFunc, b: RatFunc, chart: Chart) -> bool:
    """True when a - b depends on neither chart coordinate."""
    diff = a - b
    return diff.diff(chart.x_var).is_zero() and diff.diff(chart.y_var).is_zero()


class HamiltonianController:
    """Handles the fundamental equation and Hamiltonian checks on every chart of an atlas."""

    def __init__(self, atlas: Atlas):
        self.atlas = atlas

    def fundamental_report(self, b: Coboundary) -> VerificationReport:
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} fundamental equation")
        for chart in atlas.charts:
            if chart.id not in b:
                report.add(CheckResult(name=f"fundamental {chart.id}", passed=False,
                                       detail="no coboundary field for this chart"))
                continue
            report.add(fundamental_check(chart, atlas.density(chart.id), b[chart.id], atlas.timevar))
        return report

    def hamiltonian_report(self, b: Coboundary) -> VerificationReport:
        """Verify supplied Hamiltonians; recover one wherever the chart allows it."""
        atlas = self.atlas
        report = VerificationReport(title=f"atlas {atlas.name} hamiltonians")
        for chart in atlas.charts:
            if chart.id not in b:
                continue
            vf = b[chart.id]
            density = atlas.density(chart.id)
            recovered = self._try_recover(vf, chart, density, report)
            supplied = atlas.hamiltonians.get(chart.id)
            if supplied is not None:
                report.add(verify_hamiltonian(supplied, vf, density, chart))
                if recovered is not None:
                    report.add(CheckResult(
                        name=f"recovered matches supplied {chart.id}",
                        passed=same_modulo_time(recovered.H, supplied.H, chart),
                        detail="equal up to a function of time and parameters",
                    ))
            elif recovered is None:
                logger.debug(f"chart {chart.id}: no Hamiltonian supplied and none recoverable")
        return report

    def _try_recover(self, vf: ChartVectorField, chart: Chart, density: TwoFormDensity,
                     report: VerificationReport) -> Optional[HamiltonianDef]:
        try:
            recovered = recover_hamiltonian(vf, chart, density)
        except NotClosedError as exc:
            report.add(CheckResult(name=f"recover {chart.id}", passed=False,
                                   residual=exc.residual, detail=str(exc)))
            return None
        except (UnsupportedDensityError, NonPolynomialFieldError) as exc:
            logger.debug(f"recovery skipped on {chart.id}: {exc}")
            return None
        result = verify_hamiltonian(recovered, vf, density, chart)
        report.add(CheckResult(
            name=f"recover {chart.id}",
            passed=result.passed and result.sign == PRIMARY_SIGN,
            residual=result.residual,
            sign=result.sign,
            detail=f"H = {recovered.H}",
        ))
        return recovered

    def signs(self, b: Coboundary) -> Dict[str, Optional[int]]:
        """Resolved sign of every supplied Hamiltonian against the splitting b."""
        out: Dict[str, Optional[int]] = {}
        for cid, h in self.atlas.hamiltonians.items():
            chart = self.atlas.chart(cid)
            out[cid] = verify_hamiltonian(h, b[cid], self.atlas.density(cid), chart).sign
        return out
