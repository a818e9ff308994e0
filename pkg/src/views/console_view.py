"""
Console View
------------
Rich rendering of verification reports, elimination verdicts, lattice
classifications and integration summaries.
"""

from typing import Dict, List, Optional

from rich.console import Console
from rich.table import Table

from src.models.painleve import ScalarODE
from src.models.report import CheckResult, VerificationReport
from src.models.trajectory import Trajectory


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}j"


class ConsoleView:
    """Handles everything okapair prints to the terminal."""

    def __init__(self, console: Optional[Console] = None, verbose: bool = False, quiet: bool = False):
        self.console = console or Console(highlight=False, quiet=quiet)
        self.data = Console(highlight=False)
        self.errors = Console(stderr=True, highlight=False)
        self.verbose = verbose

    def line(self, text: str) -> None:
        """Plain line: no markup, no wrapping."""
        self.console.print(text, markup=False, highlight=False, soft_wrap=True)

    def raw(self, text: str) -> None:
        """Machine-readable output; printed even when the console is quiet."""
        self.data.out(text, highlight=False)

    def error(self, message: str) -> None:
        self.errors.print(f"[bold red]error:[/bold red] {message}", soft_wrap=True)

    # -- verification --------------------------------------------------------

    def result(self, r: CheckResult) -> None:
        status = "[green]PASS[/green]" if r.passed else "[red]FAIL[/red]"
        extra = f" (sign {r.sign:+d})" if r.sign is not None else ""
        self.console.print(f"  {status} ", end="")
        self.line(f"{r.name}{extra}")
        if not r.passed:
            if r.residual:
                self.line(f"      residual: {r.residual}")
            if r.detail:
                self.line(f"      {r.detail}")
        elif self.verbose and r.detail:
            self.line(f"      {r.detail}")

    def report(self, report: VerificationReport) -> None:
        self.console.rule(report.title)
        for r in report.results:
            self.result(r)
        s = report.summary()
        verdict = "[green]all identities hold[/green]" if report.passed else "[red]identities failed[/red]"
        self.console.print(f"{s['passed']}/{s['total']} passed: {verdict}")

    # -- painleve ------------------------------------------------------------

    def elimination(self, title: str, derived: ScalarODE, classical: ScalarODE,
                    verdict: CheckResult) -> None:
        self.console.rule(title)
        self.line(f"derived:   {derived}")
        self.line(f"classical: {classical}")
        self.line(verdict.detail or "")
        if not verdict.passed and verdict.residual:
            self.line(f"residual: {verdict.residual}")

    # -- lattice -------------------------------------------------------------

    def classification(self, desc: Dict[str, object]) -> None:
        if desc['type'] == 'unrecognized':
            self.line(f"unrecognized, n={desc['n']}")
        else:
            self.line(f"{desc['type']}, Kodaira {desc['kodaira']}, r={desc['r']}, dim={desc['dim']}")
            self.line(f"marks: {desc['marks']}")
            if desc.get('painleve'):
                self.line(f"painleve: {desc['painleve']}")
            if desc.get('alternatives'):
                self.line(f"also matches: {', '.join(desc['alternatives'])}")
        self.line(f"kernel: {desc['kernel']}")

    def tables(self, tables: Dict[str, List[Dict[str, object]]]) -> None:
        for title, rows in tables.items():
            if not rows:
                continue
            table = Table(title=title, show_lines=False)
            columns = list(rows[0])
            for col in columns:
                table.add_column(col, no_wrap=True)
            for row in rows:
                table.add_row(*(str(row[c]) for c in columns))
            self.console.print(table)

    # -- integration ---------------------------------------------------------

    def trajectory(self, traj: Trajectory) -> None:
        final = traj.final
        state = "completed" if traj.completed else "[yellow]stopped at max_steps[/yellow]"
        self.console.print(f"integration {state}")
        self.line(f"steps: {traj.steps}, rejected: {traj.rejected}, switches: {len(traj.switches)}")
        for ev in traj.switches:
            self.line(f"  switch {ev.source} -> {ev.target} at t={_fmt_complex(ev.t)}")
        self.line(f"final: chart {final.chart}, t={_fmt_complex(final.t)}, "
                  f"x={_fmt_complex(final.x)}, y={_fmt_complex(final.y)}")
