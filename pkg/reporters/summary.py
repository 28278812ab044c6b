"""Final-epoch AUROC summary over seeds"""

from pathlib import Path
from typing import Iterable, Optional

import pandas as pd
from rich.console import Console
from rich.table import Table

from core.exceptions import ReportError, SchemaError
from .csv_reporter import COLUMNS

POINT_COLUMNS = ['method', 'm', 'p', 'theta', 'gamma']


def load_results(paths: Iterable[str]) -> pd.DataFrame:
    """Concatenate result files, checking the column set"""
    frames = []
    for path in paths:
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ReportError("Cannot read result file", path=str(path), original_error=e)
        missing = [c for c in COLUMNS if c not in frame.columns]
        if missing:
            raise SchemaError(f"Result file is missing {len(missing)} column(s)", path=str(path), missing=missing)
        frames.append(frame[COLUMNS])
    if not frames:
        raise ReportError("No result files given")
    return pd.concat(frames, ignore_index=True)


def summarize(paths: Iterable[str], output_path: Optional[str] = None) -> pd.DataFrame:
    """
    Final-row AUROC per (method, sweep point): mean, min and max over seeds

    Args:
        paths: Result CSVs written by `run`
        output_path: Optional CSV destination for the summary

    Returns:
        Summary frame, one row per (method, m, p, theta, gamma)
    """
    results = load_results(paths)
    final = (
        results.sort_values('iter', kind='stable')
        .groupby(POINT_COLUMNS + ['seed'], sort=False)
        .tail(1)
    )
    summary = (
        final.groupby(POINT_COLUMNS, sort=True)
        .agg(
            seeds=('seed', 'nunique'),
            epoch=('epoch', 'max'),
            auroc_mean=('auroc_test', 'mean'),
            auroc_min=('auroc_test', 'min'),
            auroc_max=('auroc_test', 'max'),
            grad_norm_mean=('grad_norm', 'mean'),
        )
        .reset_index()
    )

    if output_path:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        summary.to_csv(output_path, index=False)
    return summary


def render_summary(summary: pd.DataFrame, console: Optional[Console] = None) -> None:
    """Print the summary as an aligned rich table"""
    console = console or Console()
    table = Table(title="Final AUROC over seeds", show_header=True, header_style="bold cyan")
    for column in summary.columns:
        table.add_column(column, justify="left" if column == 'method' else "right")

    for _, row in summary.iterrows():
        cells = []
        for column in summary.columns:
            value = row[column]
            if isinstance(value, float):
                cells.append("-" if pd.isna(value) else f"{value:.4f}")
            else:
                cells.append(str(value))
        table.add_row(*cells)

    console.print(table)
