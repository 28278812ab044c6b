"""
Unit tests for Error Handler
"""

import pytest

from core.error_handler import ErrorHandler
from core.exceptions import (
    ConfigurationError,
    DataFormatError,
    DivergenceError,
    PrivacyError,
)


@pytest.mark.unit
def test_handle_configuration_error(capsys):
    """Every offending key is listed"""
    error = ConfigurationError(
        "Invalid configuration (2 errors)",
        details={'errors': ["privacy.theta: theta must be positive", "topology.m: m must be at least 1"]},
    )
    ErrorHandler.handle_exception(error, verbose=False)
    err = capsys.readouterr().err
    assert "Configuration Error" in err
    assert "privacy.theta" in err
    assert "topology.m" in err


@pytest.mark.unit
def test_handle_divergence_error(capsys):
    """Iteration, agent and run coordinates are shown"""
    error = DivergenceError("non-finite X", iteration=41, agent=3,
                            details={'method': 'dpmixsgd', 'seed': 2})
    ErrorHandler.handle_exception(error, verbose=False)
    err = capsys.readouterr().err
    assert "Run diverged" in err
    assert "41" in err
    assert "dpmixsgd" in err


@pytest.mark.unit
def test_handle_data_error(capsys):
    error = DataFormatError("label must be binary", line_number=2)
    ErrorHandler.handle_exception(error, verbose=False)
    err = capsys.readouterr().err
    assert "Data Error" in err
    assert "line 2" in err


@pytest.mark.unit
def test_verbose_shows_original(capsys):
    error = PrivacyError("Cannot calibrate", original_error=ValueError("log of zero"))
    ErrorHandler.handle_exception(error, verbose=True)
    assert "log of zero" in capsys.readouterr().err


@pytest.mark.unit
def test_handle_unknown_error(capsys):
    ErrorHandler.handle_exception(RuntimeError("surprise"), verbose=False)
    err = capsys.readouterr().err
    assert "Unexpected Error" in err
    assert "surprise" in err


@pytest.mark.unit
def test_keyboard_interrupt(capsys):
    ErrorHandler.handle_exception(KeyboardInterrupt(), verbose=False)
    assert "interrupted" in capsys.readouterr().err


@pytest.mark.unit
def test_error_summary(capsys):
    ErrorHandler.display_error_summary([PrivacyError("gamma out of range"), RuntimeError("x")])
    err = capsys.readouterr().err
    assert "PrivacyError" in err
    assert "UNKNOWN" in err


@pytest.mark.unit
def test_error_summary_empty(capsys):
    ErrorHandler.display_error_summary([])
    assert capsys.readouterr().err == ""
