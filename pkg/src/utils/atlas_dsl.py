"""
Atlas DSL
---------
Loader and printer for the line-oriented atlas description language.

    atlas NAME
    params IDENT*
    timevar IDENT
    chart ID vars IDENT IDENT denom EXPR order UINT
    transition ID -> ID { IDENT = EXPR ; IDENT = EXPR }
    coboundary ID { eta = EXPR ; zeta = EXPR }
    hamiltonian ID { H = EXPR }

'#' starts a comment. A braced block may span several lines.
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

from loguru import logger

from src.models.atlas import Atlas, Chart, Transition, TwoFormDensity
from src.models.fields import ChartVectorField, Coboundary, HamiltonianDef
from src.models.ratfunc import RatFunc, VarTable
from src.utils.errors import AtlasError, AtlasSyntaxError, ExpressionError
from src.utils.expr_parser import ExprParser

IDENT = r'[A-Za-z_][A-Za-z0-9_]*'

ATLAS_RE = re.compile(rf'atlas\s+({IDENT})\s*$')
PARAMS_RE = re.compile(rf'params((?:\s+{IDENT})*)\s*$')
TIMEVAR_RE = re.compile(rf'timevar\s+({IDENT})\s*$')
CHART_RE = re.compile(
    rf'chart\s+({IDENT})\s+vars\s+({IDENT})\s+({IDENT})\s+denom\s+(.+?)\s+order\s+(\d+)\s*$'
)
TRANSITION_RE = re.compile(rf'transition\s+({IDENT})\s*->\s*({IDENT})\s*\{{(.*)\}}\s*$', re.S)
COBOUNDARY_RE = re.compile(rf'coboundary\s+({IDENT})\s*\{{(.*)\}}\s*$', re.S)
HAMILTONIAN_RE = re.compile(rf'hamiltonian\s+({IDENT})\s*\{{(.*)\}}\s*$', re.S)
ASSIGN_RE = re.compile(rf'\s*({IDENT})\s*=(.*)$', re.S)

KEYWORDS = ('atlas', 'params', 'timevar', 'chart', 'transition', 'coboundary', 'hamiltonian')

BUILTIN_DIR = Path(__file__).resolve().parent.parent / 'data'


@dataclass(frozen=True)
class Statement:
    line: int
    text: str

    @property
    def keyword(self) -> str:
        return self.text.split(None, 1)[0]


def split_statements(text: str) -> List[Statement]:
    """Strip comments and join braced blocks into single statements."""
    statements: List[Statement] = []
    pending: List[str] = []
    start = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line and not pending:
            continue
        if not pending:
            start = number
        pending.append(line)
        joined = ' '.join(pending)
        if joined.count('{') > joined.count('}'):
            continue
        statements.append(Statement(start, joined.strip()))
        pending = []
    if pending:
        raise AtlasSyntaxError(start, "unterminated block (missing '}')")
    return statements


def _block_assignments(stmt: Statement, body: str) -> List[Tuple[str, str]]:
    pairs = []
    for part in body.split(';'):
        if not part.strip():
            continue
        m = ASSIGN_RE.match(part)
        if not m:
            raise AtlasSyntaxError(stmt.line, f"expected 'NAME = EXPR', found {part.strip()!r}")
        pairs.append((m.group(1), m.group(2).strip()))
    return pairs


class AtlasLoader:
    """Builds an Atlas from DSL text."""

    def __init__(self, text: str, origin: str = '<string>'):
        self.text = text
        self.origin = origin

    def load(self) -> Atlas:
        statements = split_statements(self.text)
        header = self._read_header(statements)
        name, params, timevar, chart_lines = header
        names: List[str] = []
        for stmt, m in chart_lines:
            names.extend([m.group(2), m.group(3)])
        names.append(timevar)
        names.extend(params)
        try:
            vars = VarTable(names)
        except ValueError as exc:
            raise AtlasSyntaxError(chart_lines[0][0].line if chart_lines else 1, str(exc)) from exc
        parser = ExprParser(vars)

        def parse(stmt: Statement, expr: str) -> RatFunc:
            try:
                return parser.parse(expr)
            except ExpressionError as exc:
                raise AtlasSyntaxError(stmt.line, f"{exc} in {expr!r}") from exc

        charts: List[Chart] = []
        for stmt, m in chart_lines:
            denom = parse(stmt, m.group(4))
            if not denom.is_polynomial():
                raise AtlasSyntaxError(stmt.line, "chart denom must be a polynomial")
            try:
                charts.append(Chart(m.group(1), m.group(2), m.group(3), denom.as_poly(), int(m.group(5))))
            except AtlasError as exc:
                raise AtlasSyntaxError(stmt.line, str(exc)) from exc
        by_id = {c.id: c for c in charts}
        if len(by_id) != len(charts):
            raise AtlasSyntaxError(chart_lines[-1][0].line, "duplicate chart id")

        transitions: Dict[Tuple[str, str], Transition] = {}
        fields: Dict[str, ChartVectorField] = {}
        hamiltonians: Dict[str, HamiltonianDef] = {}
        for stmt in statements:
            kw = stmt.keyword
            if kw == 'transition':
                tr = self._transition(stmt, by_id, parse)
                if (tr.source, tr.target) in transitions:
                    raise AtlasSyntaxError(stmt.line, f"duplicate transition {tr.source} -> {tr.target}")
                transitions[(tr.source, tr.target)] = tr
            elif kw == 'coboundary':
                m = COBOUNDARY_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(stmt.line, "malformed coboundary block")
                cid = self._known_chart(stmt, by_id, m.group(1))
                values = dict(_block_assignments(stmt, m.group(2)))
                if set(values) != {'eta', 'zeta'}:
                    raise AtlasSyntaxError(stmt.line, "coboundary block must assign eta and zeta")
                fields[cid] = ChartVectorField(cid, parse(stmt, values['eta']), parse(stmt, values['zeta']))
            elif kw == 'hamiltonian':
                m = HAMILTONIAN_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(stmt.line, "malformed hamiltonian block")
                cid = self._known_chart(stmt, by_id, m.group(1))
                values = dict(_block_assignments(stmt, m.group(2)))
                if set(values) != {'H'}:
                    raise AtlasSyntaxError(stmt.line, "hamiltonian block must assign H")
                hamiltonians[cid] = HamiltonianDef(cid, parse(stmt, values['H']))

        coboundary = None
        if fields:
            missing = [c for c in by_id if c not in fields]
            if missing:
                raise AtlasSyntaxError(len(self.text.splitlines()),
                                       f"coboundary missing for chart(s) {', '.join(missing)}")
            coboundary = Coboundary(fields)
        atlas = Atlas(
            name=name,
            vars=vars,
            params=tuple(params),
            timevar=timevar,
            charts=tuple(charts),
            densities={c.id: TwoFormDensity.for_chart(c) for c in charts},
            transitions=transitions,
            coboundary=coboundary,
            hamiltonians=hamiltonians,
        )
        logger.debug(f"loaded atlas {name} from {self.origin}: "
                     f"{len(charts)} charts, {len(transitions)} transitions")
        return atlas

    # -- pieces ----------------------------------------------------------------

    def _read_header(self, statements: List[Statement]):
        name = None
        params: List[str] = []
        timevar = None
        chart_lines = []
        for stmt in statements:
            kw = stmt.keyword
            if kw not in KEYWORDS:
                raise AtlasSyntaxError(stmt.line, f"unknown statement {kw!r}")
            if kw == 'atlas':
                m = ATLAS_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(stmt.line, "expected 'atlas NAME'")
                name = m.group(1)
            elif kw == 'params':
                m = PARAMS_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(stmt.line, "expected 'params IDENT*'")
                params = m.group(1).split()
            elif kw == 'timevar':
                m = TIMEVAR_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(stmt.line, "expected 'timevar IDENT'")
                timevar = m.group(1)
            elif kw == 'chart':
                m = CHART_RE.match(stmt.text)
                if not m:
                    raise AtlasSyntaxError(
                        stmt.line, "expected 'chart ID vars IDENT IDENT denom EXPR order UINT'")
                chart_lines.append((stmt, m))
        if name is None:
            raise AtlasSyntaxError(1, "missing 'atlas NAME' statement")
        if timevar is None:
            raise AtlasSyntaxError(1, "missing 'timevar IDENT' statement")
        if not chart_lines:
            raise AtlasSyntaxError(1, "atlas declares no charts")
        return name, params, timevar, chart_lines

    @staticmethod
    def _known_chart(stmt: Statement, by_id: Dict[str, Chart], cid: str) -> str:
        if cid not in by_id:
            raise AtlasSyntaxError(stmt.line, f"unknown chart {cid!r}")
        return cid

    def _transition(self, stmt: Statement, by_id: Dict[str, Chart], parse) -> Transition:
        m = TRANSITION_RE.match(stmt.text)
        if not m:
            raise AtlasSyntaxError(stmt.line, "expected 'transition ID -> ID { x = EXPR ; y = EXPR }'")
        source = self._known_chart(stmt, by_id, m.group(1))
        target = self._known_chart(stmt, by_id, m.group(2))
        if source == target:
            raise AtlasSyntaxError(stmt.line, "transition from a chart to itself")
        values = dict(_block_assignments(stmt, m.group(3)))
        tc = by_id[target]
        if set(values) != {tc.x_var, tc.y_var}:
            raise AtlasSyntaxError(
                stmt.line,
                f"transition {source} -> {target} must assign {tc.x_var} and {tc.y_var}",
            )
        x_text, y_text = values[tc.x_var], values[tc.y_var]
        return Transition(source, target, parse(stmt, x_text), parse(stmt, y_text), (x_text, y_text))


def load_atlas_text(text: str, origin: str = '<string>') -> Atlas:
    return AtlasLoader(text, origin).load()


def load_atlas_file(path: Union[str, Path]) -> Atlas:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise AtlasError(f"cannot read atlas file {path}: {exc}") from exc
    return load_atlas_text(text, str(path))


def dump_atlas(atlas: Atlas) -> str:
    """Print an atlas back in DSL form."""
    lines = [f"atlas {atlas.name}"]
    lines.append(("params " + " ".join(atlas.params)).rstrip())
    lines.append(f"timevar {atlas.timevar}")
    for c in atlas.charts:
        lines.append(f"chart {c.id} vars {c.x_var} {c.y_var} denom {c.denom} order {c.pole_order}")
    for (s, t), tr in atlas.transitions.items():
        tc = atlas.chart(t)
        lines.append(f"transition {s} -> {t} {{ {tc.x_var} = {tr.x_expr} ; {tc.y_var} = {tr.y_expr} }}")
    if atlas.coboundary is not None:
        for cid, vf in atlas.coboundary.fields.items():
            lines.append(f"coboundary {cid} {{ eta = {vf.eta} ; zeta = {vf.zeta} }}")
    for cid, h in atlas.hamiltonians.items():
        lines.append(f"hamiltonian {cid} {{ H = {h.H} }}")
    return "\n".join(lines) + "\n"
