"""
Report Handler
--------------
Writes verification reports and trajectories to disk.
"""

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

import orjson
import pandas as pd
from loguru import logger

from src.models.report import VerificationReport
from src.models.trajectory import Trajectory
from src.utils.config import OutputSettings

TRAJECTORY_COLUMNS = ['t_re', 't_im', 'chart', 'x_re', 'x_im', 'y_re', 'y_im', 'h', 'err']
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY


def dumps(data: Dict[str, Any]) -> str:
    return orjson.dumps(data, option=JSON_OPTIONS).decode()


class ReportHandler:
    """Handles report and trajectory output."""

    def __init__(self, config: Optional[OutputSettings] = None):
        self.config = config or OutputSettings()
        self.reports_dir = Path(self.config.reports_dir)

    def _target(self, path: Optional[Union[str, Path]], stem: str, suffix: str) -> Path:
        if path is None:
            self.reports_dir.mkdir(parents=True, exist_ok=True)
            timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
            return self.reports_dir / f"{stem}_{timestamp}.{suffix}"
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_report(self, report: Union[VerificationReport, Dict[str, Any]],
                     path: Optional[Union[str, Path]] = None) -> Path:
        data = report.to_dict() if isinstance(report, VerificationReport) else report
        target = self._target(path, 'report', 'json')
        target.write_bytes(orjson.dumps(data, option=JSON_OPTIONS))
        logger.info(f"report written to {target}")
        return target

    def write_trajectory(self, traj: Trajectory, path: Optional[Union[str, Path]] = None,
                         fmt: Optional[str] = None) -> Path:
        """JSON keeps switch events; CSV is one row per accepted sample."""
        fmt = fmt or self.config.trajectory_format
        target = self._target(path, 'trajectory', fmt)
        if fmt == 'csv':
            frame = pd.DataFrame.from_records(traj.rows(), columns=TRAJECTORY_COLUMNS)
            frame.to_csv(target, index=False, float_format='%.17g')
        elif fmt == 'json':
            target.write_bytes(orjson.dumps(traj.to_dict(), option=JSON_OPTIONS))
        else:
            raise ValueError(f"unknown trajectory format {fmt!r}")
        logger.info(f"trajectory with {len(traj.samples)} samples written to {target}")
        return target

    @staticmethod
    def read_trajectory_csv(path: Union[str, Path]) -> pd.DataFrame:
        return pd.read_csv(path)
