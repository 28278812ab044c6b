"""Result writing and summaries"""

from .csv_reporter import COLUMNS, CSVReporter, RunContext, write_manifest
from .summary import load_results, render_summary, summarize

__all__ = [
    'COLUMNS',
    'CSVReporter',
    'RunContext',
    'write_manifest',
    'load_results',
    'render_summary',
    'summarize',
]
