"""
Progress tracking for experiment sweeps
"""

import threading
from datetime import datetime
from typing import Dict, Optional

from loguru import logger
from rich.console import Console
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TaskID,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)
from rich.table import Table


class SweepProgress:
    """
    Live progress bar over the runs of a sweep, with run counters

    Example:
        tracker = SweepProgress(total_runs=12)
        tracker.start()
        tracker.run_finished("dpmixsgd m=10 seed=0")
        tracker.stop()
    """

    def __init__(self, total_runs: int, console: Optional[Console] = None, enabled: bool = True):
        """
        Args:
            total_runs: Number of (method, point, seed) runs
            console: Rich Console instance (stderr console if None)
            enabled: Disable the live bar for CI / tests
        """
        self.console = console or Console(stderr=True)
        self.enabled = enabled
        self.total_runs = total_runs
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(bar_width=40),
            TextColumn("{task.completed}/{task.total}"),
            TimeElapsedColumn(),
            TimeRemainingColumn(),
            console=self.console,
            transient=True,
        )
        self.task: Optional[TaskID] = None
        self.stats: Dict[str, int] = {'completed': 0, 'failed': 0, 'rows': 0}
        self.start_time: Optional[datetime] = None
        self._lock = threading.Lock()

    def start(self) -> None:
        self.start_time = datetime.now()
        if self.enabled:
            self.progress.start()
            self.task = self.progress.add_task("runs", total=self.total_runs)
        logger.debug(f"Sweep started: {self.total_runs} runs")

    def stop(self) -> None:
        if self.enabled and self.task is not None:
            self.progress.stop()
            self.task = None

    def run_finished(self, label: str, rows: int = 0, failed: bool = False) -> None:
        """Count one run and advance the bar"""
        with self._lock:
            self.stats['failed' if failed else 'completed'] += 1
            self.stats['rows'] += rows
        if self.task is not None:
            self.progress.update(self.task, advance=1, description=label)

    def elapsed_seconds(self) -> float:
        if self.start_time is None:
            return 0.0
        return (datetime.now() - self.start_time).total_seconds()

    def print_summary(self) -> None:
        """Run counters as a small table"""
        table = Table(title="Sweep", show_header=False)
        table.add_column("stat", style="cyan")
        table.add_column("value", justify="right")
        table.add_row("runs completed", str(self.stats['completed']))
        table.add_row("runs failed", str(self.stats['failed']))
        table.add_row("rows", str(self.stats['rows']))
        table.add_row("elapsed", f"{self.elapsed_seconds():.1f}s")
        self.console.print(table)
