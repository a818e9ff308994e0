"""
Main Controller
---------------
Coordinates the controllers, views and handlers behind each okapair
subcommand. Every cmd_* method returns the process exit code.
"""

from typing import Any, Dict, Optional

from loguru import logger

from src.controllers.atlas_controller import AtlasController, builtin_atlas
from src.controllers.hamiltonian_controller import HamiltonianController
from src.controllers.integrator import integrate, single_sample
from src.controllers.kodaira_spencer import KodairaSpencerController
from src.controllers.lattice_controller import LatticeController, load_matrix
from src.controllers.painleve_controller import PainleveController, load_tables, system
from src.handlers.report_handler import ReportHandler, dumps
from src.models.atlas import Atlas
from src.models.lattice import root_type
from src.models.report import CheckResult, VerificationReport
from src.models.trajectory import PhaseState, TPath
from src.utils.atlas_dsl import load_atlas_file
from src.utils.config import OkaPairConfig, RunConfig
from src.utils.errors import AtlasError
from src.views.console_view import ConsoleView

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class MainController:
    """Runs one subcommand against the configured settings."""

    def __init__(self, config: Optional[OkaPairConfig] = None, view: Optional[ConsoleView] = None,
                 reports: Optional[ReportHandler] = None):
        self.config = config or OkaPairConfig()
        self.view = view or ConsoleView()
        self.reports = reports or ReportHandler(self.config.output())
        self.painleve = PainleveController()
        self.lattice = LatticeController()

    def run(self, run: RunConfig) -> int:
        self.config.symbolic().apply()
        return getattr(self, f"cmd_{run.command}")(run)

    def _atlas(self, run: RunConfig) -> Atlas:
        return builtin_atlas(run.atlas) if run.atlas else load_atlas_file(run.file)

    def _emit(self, run: RunConfig, data: Dict[str, Any]) -> None:
        if run.json_output:
            self.view.raw(dumps(data))

    def verify_atlas(self, atlas: Atlas) -> VerificationReport:
        """Consistency, densities, cocycle, coboundary, fundamental equation, Hamiltonians."""
        logger.info(f"verifying atlas {atlas.name}")
        report = VerificationReport(title=f"atlas {atlas.name}")
        charts = AtlasController(atlas)
        report.merge(charts.check_atlas())
        report.merge(charts.check_densities())

        ks = KodairaSpencerController(atlas)
        cocycle = ks.ks_cocycle()
        report.merge(ks.verify_cocycle(cocycle))
        b = atlas.coboundary
        if b is None:
            report.add(CheckResult(name="coboundary", passed=False,
                                   detail="the atlas declares no coboundary fields"))
            return report
        report.merge(ks.verify_coboundary(cocycle, b))
        report.merge(ks.verify_gluing(b))

        hamiltonians = HamiltonianController(atlas)
        report.merge(hamiltonians.fundamental_report(b))
        report.merge(hamiltonians.hamiltonian_report(b))
        logger.info(f"atlas {atlas.name}: {report.summary()}")
        return report

    def cmd_verify(self, run: RunConfig) -> int:
        report = self.verify_atlas(self._atlas(run))
        self.view.report(report)
        self._emit(run, report.to_dict())
        if run.out is not None:
            self.reports.write_report(report, run.out)
        return EXIT_OK if report.passed else EXIT_FAILED

    def cmd_integrate(self, run: RunConfig) -> int:
        atlas = self._atlas(run)
        if atlas.coboundary is None:
            raise AtlasError(f"atlas {atlas.name} has no coboundary fields to integrate")
        settings = self.config.integrator()
        updates = {k: v for k, v in (('rtol', run.rtol), ('atol', run.atol), ('switching', run.switching))
                   if v is not None}
        if updates:
            settings = settings.model_copy(update=updates)
        waypoints = run.waypoints()
        init = PhaseState(run.chart or atlas.charts[0].id, run.x0, run.y0, waypoints[0])
        if all(w == waypoints[0] for w in waypoints):
            traj = single_sample(atlas, atlas.coboundary, init, run.params)
        else:
            traj = integrate(atlas, atlas.coboundary, TPath(tuple(waypoints), run.params), init,
                             settings=settings)
        self.view.trajectory(traj)
        self._emit(run, traj.to_dict())
        if run.out is not None:
            self.reports.write_trajectory(traj, run.out, run.format)
        return EXIT_OK if traj.completed else EXIT_FAILED

    def cmd_eliminate(self, run: RunConfig) -> int:
        if run.system is not None:
            derived, verdict = self.painleve.elimination(run.system)
            s = system(run.system)
            self.view.elimination(s.title, derived, s.ode, verdict)
            report = VerificationReport(title=f"{s.title} elimination", results=[verdict])
        elif run.reduction is not None:
            derived, report = self.painleve.reduction(run.reduction)
            row = load_tables()['reductions'][run.reduction]
            target = system(row['matches'])
            self.view.elimination(report.title, derived, target.ode, report.results[-1])
            self.view.report(report)
        else:
            report = self.painleve.full_report()
            self.view.report(report)
        self._emit(run, report.to_dict())
        if run.out is not None:
            self.reports.write_report(report, run.out)
        return EXIT_OK if report.passed else EXIT_FAILED

    def cmd_classify(self, run: RunConfig) -> int:
        m = load_matrix(run.file) if run.file is not None else root_type(run.root_type).matrix
        desc = self.lattice.describe(m)
        self.view.classification(desc)
        self._emit(run, desc)
        return EXIT_FAILED if desc['type'] == 'unrecognized' else EXIT_OK

    def cmd_tables(self, run: RunConfig) -> int:
        tables = self.lattice.tables()
        self.view.tables(tables)
        self._emit(run, tables)
        return EXIT_OK
