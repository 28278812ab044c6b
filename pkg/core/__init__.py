"""
dpmixsgd core package
Differentially private decentralized min-max optimization

Submodules are imported directly (core.config, core.engine, ...); only the
exception hierarchy is re-exported here.
"""

__version__ = "0.3.0"
__license__ = "MIT"

from .exceptions import (
    DPMixError,
    ConfigurationError,
    ValidationError,
    DimensionError,
    TopologyError,
    DataFormatError,
    DivergenceError,
    PrivacyError,
    ReportError,
    SchemaError,
)

__all__ = [
    "DPMixError",
    "ConfigurationError",
    "ValidationError",
    "DimensionError",
    "TopologyError",
    "DataFormatError",
    "DivergenceError",
    "PrivacyError",
    "ReportError",
    "SchemaError",
]
