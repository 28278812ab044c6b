"""Result CSV sink and run manifest"""

import csv
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger

from core.exceptions import ReportError
from core.models import RunRecord

COLUMNS = [
    'method', 'seed', 'm', 'p', 'theta', 'gamma', 'sigma',
    'iter', 'epoch', 'auroc_test', 'grad_norm', 'consensus_x', 'consensus_y', 'wall_ms',
]


@dataclass(frozen=True)
class RunContext:
    """Sweep coordinates of one run"""
    method: str
    seed: int
    m: int
    p: float
    theta: float
    gamma: float
    sigma: float
    sweep_value: float = 0.0


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class CSVReporter:
    """
    Collects rows from concurrent runs and writes them once, sorted

    Rows are ordered by (method, seed, sweep value, iter) so the file content does not
    depend on which run finished first.
    """

    def __init__(self, output_path: str, wall_clock: bool = True):
        self.output_path = Path(output_path)
        self.wall_clock = wall_clock
        self._rows: List[tuple] = []
        self._lock = threading.Lock()

    def add_record(self, ctx: RunContext, record: RunRecord) -> None:
        rows = []
        for row in record.rows:
            values = [
                ctx.method, ctx.seed, ctx.m, float(ctx.p), float(ctx.theta), float(ctx.gamma),
                float(ctx.sigma), row.iteration, float(row.epoch),
                None if row.auroc_test is None else float(row.auroc_test),
                float(row.grad_norm), float(row.consensus_x), float(row.consensus_y),
                float(row.wall_ms) if self.wall_clock else 0.0,
            ]
            rows.append(((ctx.method, ctx.seed, ctx.sweep_value, row.iteration), values))
        with self._lock:
            self._rows.extend(rows)

    @property
    def row_count(self) -> int:
        return len(self._rows)

    def flush(self) -> str:
        """Write every collected row; safe to call after a failed sweep"""
        with self._lock:
            ordered = [values for _, values in sorted(self._rows, key=lambda r: r[0])]

        try:
            self.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.output_path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(COLUMNS)
                for values in ordered:
                    writer.writerow([_fmt(v) for v in values])
        except OSError as e:
            raise ReportError("Cannot write results", path=str(self.output_path), original_error=e)

        logger.info(f"Wrote {len(ordered)} rows to {self.output_path}")
        return str(self.output_path)


def write_manifest(
    path: str,
    config: Dict[str, Any],
    topologies: List[Dict[str, Any]],
    notes: Optional[List[str]] = None,
) -> str:
    """
    Resolved config plus the effective graph of every sweep point

    The `config` mapping can be passed back to `run` unchanged.
    """
    document = {
        'config': config,
        'topologies': topologies,
        'notes': notes or [],
    }
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            yaml.safe_dump(document, f, default_flow_style=False, sort_keys=False)
    except OSError as e:
        raise ReportError("Cannot write manifest", path=str(target), original_error=e)
    return str(target)
