"""Utility functions and helpers"""

from .rng import RUN_SCOPE, Purpose, stream
from .validators import ArrayValidator, RangeValidator

__all__ = ['RUN_SCOPE', 'Purpose', 'stream', 'ArrayValidator', 'RangeValidator']
