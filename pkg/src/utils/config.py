"""
Configuration Manager
---------------------
JSON configuration for okapair with defaults merged in, OKAPAIR_*
environment overrides (a .env file is honoured), and the validated
settings models handed to the symbolic and numeric layers.
"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import orjson
from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, Field, PositiveFloat, PositiveInt, model_validator

from src.models.ratfunc import set_degree_cap

DEFAULT_CONFIG_FILE = 'config/okapair_config.json'
ENV_PREFIX = 'OKAPAIR_'

DEFAULTS: Dict[str, Any] = {
    'logging': {
        'level': 'INFO',
        'file': None,
        'rotation': '10 MB',
        'retention': '7 days',
    },
    'symbolic': {
        'degree_cap': 512,
    },
    'integrator': {
        'rtol': 1e-9,
        'atol': 1e-12,
        'max_steps': 1_000_000,
        'safety': 0.9,
        'min_factor': 0.2,
        'max_factor': 5.0,
        'hysteresis': 0.1,
        'switch_floor': 1e-12,
        'h_min_factor': 1e-13,
        'roundtrip_tol': 1e-12,
        'switching': 'auto',
        'force_every': 10,
        'max_step': None,
        'fixed_step': None,
    },
    'output': {
        'reports_dir': 'reports',
        'trajectory_format': 'json',
    },
}


class SymbolicSettings(BaseModel):
    degree_cap: PositiveInt = 512

    def apply(self) -> None:
        set_degree_cap(self.degree_cap)


class IntegratorSettings(BaseModel):
    """Tolerances and step-control constants for the chart-switching integrator."""

    rtol: PositiveFloat = 1e-9
    atol: PositiveFloat = 1e-12
    max_steps: PositiveInt = 1_000_000
    safety: PositiveFloat = 0.9
    min_factor: PositiveFloat = 0.2
    max_factor: PositiveFloat = 5.0
    hysteresis: float = Field(0.1, gt=0, le=1)
    switch_floor: PositiveFloat = 1e-12
    h_min_factor: PositiveFloat = 1e-13
    roundtrip_tol: PositiveFloat = 1e-12
    switching: Literal['auto', 'off', 'forced'] = 'auto'
    force_every: PositiveInt = 10
    max_step: Optional[PositiveFloat] = None
    fixed_step: Optional[PositiveFloat] = None

    @model_validator(mode='after')
    def _factor_order(self) -> 'IntegratorSettings':
        if self.min_factor >= 1 or self.max_factor <= 1:
            raise ValueError("step factors need min_factor < 1 < max_factor")
        return self


class LoggingSettings(BaseModel):
    level: str = 'INFO'
    file: Optional[str] = None
    rotation: str = '10 MB'
    retention: str = '7 days'


class OutputSettings(BaseModel):
    reports_dir: str = 'reports'
    trajectory_format: Literal['json', 'csv'] = 'json'


class RunConfig(BaseModel):
    """One CLI invocation after argument parsing."""

    command: Literal['verify', 'integrate', 'eliminate', 'classify', 'tables']
    atlas: Optional[str] = None
    file: Optional[Path] = None
    params: Dict[str, complex] = Field(default_factory=dict)
    rtol: Optional[PositiveFloat] = None
    atol: Optional[PositiveFloat] = None
    out: Optional[Path] = None
    format: Optional[Literal['json', 'csv']] = None
    json_output: bool = False
    # integrate
    chart: Optional[str] = None
    x0: complex = 0j
    y0: complex = 0j
    t0: complex = 0j
    t1: Optional[complex] = None
    path: Optional[List[complex]] = None
    switching: Optional[Literal['auto', 'off', 'forced']] = None
    # eliminate / classify
    system: Optional[str] = None
    reduction: Optional[str] = None
    root_type: Optional[str] = None

    @model_validator(mode='after')
    def _one_source(self) -> 'RunConfig':
        if self.command in ('verify', 'integrate') and (self.atlas is None) == (self.file is None):
            raise ValueError("give exactly one of --atlas and --file")
        if self.command == 'integrate' and self.path is None and self.t1 is None:
            raise ValueError("integrate needs --t1 or --path")
        if self.command == 'integrate' and self.path is not None and len(self.path) < 2:
            raise ValueError("--path needs at least two waypoints")
        if self.command == 'classify' and (self.file is None) == (self.root_type is None):
            raise ValueError("classify needs exactly one of --file and --type")
        if self.command == 'eliminate' and self.system is not None and self.reduction is not None:
            raise ValueError("give at most one of --system and --reduction")
        return self

    def waypoints(self) -> List[complex]:
        return list(self.path) if self.path is not None else [self.t0, self.t1]


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _env_value(raw: str) -> Any:
    try:
        return orjson.loads(raw)
    except orjson.JSONDecodeError:
        return raw


class OkaPairConfig:
    """Manages okapair configuration."""

    def __init__(self, config_file: Optional[str] = None, use_env: bool = True):
        self.config_file = config_file or DEFAULT_CONFIG_FILE
        self.use_env = use_env
        self.config_data = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Defaults, then the JSON file, then OKAPAIR_* variables."""
        data = copy.deepcopy(DEFAULTS)
        path = Path(self.config_file)
        if path.exists():
            try:
                data = _merge(data, orjson.loads(path.read_bytes()))
            except orjson.JSONDecodeError as exc:
                logger.warning(f"ignoring malformed config file {path}: {exc}")
        if self.use_env:
            load_dotenv()
            data = _merge(data, self._env_overrides())
        return data

    @staticmethod
    def _env_overrides() -> Dict[str, Any]:
        """OKAPAIR_INTEGRATOR__RTOL=1e-10 becomes {'integrator': {'rtol': 1e-10}}."""
        out: Dict[str, Any] = {}
        for name, raw in os.environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            keys: List[str] = name[len(ENV_PREFIX):].lower().split('__')
            node = out
            for k in keys[:-1]:
                node = node.setdefault(k, {})
            node[keys[-1]] = _env_value(raw)
        return out

    def _save_config(self, config_data: Dict[str, Any]) -> None:
        path = Path(self.config_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(orjson.dumps(config_data, option=orjson.OPT_INDENT_2))

    def get(self, key: str, default=None):
        """Dotted lookup, e.g. get('integrator.rtol')."""
        value = self.config_data
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value) -> None:
        keys = key.split('.')
        node = self.config_data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value

    def save(self) -> None:
        self._save_config(self.config_data)

    def reload(self) -> None:
        self.config_data = self._load_config()

    def get_all(self) -> Dict[str, Any]:
        return copy.deepcopy(self.config_data)

    # -- validated views -------------------------------------------------------

    def symbolic(self) -> SymbolicSettings:
        return SymbolicSettings.model_validate(self.get('symbolic', {}))

    def integrator(self) -> IntegratorSettings:
        return IntegratorSettings.model_validate(self.get('integrator', {}))

    def logging(self) -> LoggingSettings:
        return LoggingSettings.model_validate(self.get('logging', {}))

    def output(self) -> OutputSettings:
        return OutputSettings.model_validate(self.get('output', {}))
