"""Unit tests for configuration loading, logging setup and the error hierarchy."""

import json
import logging

import pytest
from pydantic import ValidationError as PydanticValidationError

from multijet.config import Config, load_config
from multijet.exceptions import (
    EXIT_INPUT_ERROR,
    EXIT_NUMERICAL_DEGENERACY,
    EXIT_VALIDATION_FAILURE,
    AcceptanceFailure,
    CapExceededError,
    ConfigurationError,
    DegenerateConditioningError,
    DimensionMismatchError,
    IntegrabilityWarning,
    RankDeficientError,
    ResolutionWarning,
    SmoothnessError,
    UnknownFunctionError,
    ValidationError,
)
from multijet.logging import configure_logging, get_logger, log_command_execution


class TestConfig:
    """Tests for Config and load_config."""

    def test_defaults(self, monkeypatch):
        """Test the defaults without environment overrides."""
        for key in ("MULTIJET_THREADS", "MULTIJET_LOG_LEVEL", "MULTIJET_MAX_TRIALS"):
            monkeypatch.delenv(key, raising=False)
        config = load_config()
        assert config.threads == 1
        assert config.log_level == "INFO"
        assert config.chunk_size == 4096
        assert config.grid_spacing == 0.02
        assert config.max_trials == 50_000

    def test_environment(self, monkeypatch):
        """Test that MULTIJET_* variables are read."""
        monkeypatch.setenv("MULTIJET_THREADS", "4")
        monkeypatch.setenv("MULTIJET_LOG_LEVEL", "debug")
        monkeypatch.setenv("MULTIJET_STRUCTURED_LOGGING", "false")
        monkeypatch.setenv("MULTIJET_MC_SAMPLES", "2000")
        config = load_config()
        assert config.threads == 4
        assert config.log_level == "DEBUG"
        assert config.structured_logging is False
        assert config.mc_samples == 2000

    def test_numerical_tolerances_from_environment(self, monkeypatch):
        """Test the quadrature depth, cluster tolerance and jitter variables."""
        monkeypatch.setenv("MULTIJET_QUADRATURE_MAX_DEPTH", "30")
        monkeypatch.setenv("MULTIJET_CLUSTER_TOL_FACTOR", "1e-6")
        monkeypatch.setenv("MULTIJET_PSD_JITTER", "0")
        config = load_config()
        assert config.quadrature_max_depth == 30
        assert config.cluster_tol_factor == 1e-6
        assert config.psd_jitter == 0.0

    def test_quadrature_depth_must_be_positive(self, monkeypatch):
        """Test that a zero depth cap is rejected."""
        monkeypatch.setenv("MULTIJET_QUADRATURE_MAX_DEPTH", "0")
        with pytest.raises(ConfigurationError):
            load_config()

    def test_overrides_take_precedence(self, monkeypatch):
        """Test that explicit values beat the environment and None is ignored."""
        monkeypatch.setenv("MULTIJET_THREADS", "4")
        config = load_config(threads=2, log_level=None)
        assert config.threads == 2

    def test_invalid_environment(self, monkeypatch):
        """Test that unparsable values raise ConfigurationError."""
        monkeypatch.setenv("MULTIJET_THREADS", "many")
        with pytest.raises(ConfigurationError):
            load_config()

    def test_out_of_range(self, monkeypatch):
        """Test that range violations raise ConfigurationError."""
        monkeypatch.setenv("MULTIJET_GRID_SPACING", "0.2")
        with pytest.raises(ConfigurationError):
            load_config()

    def test_log_level_validated(self):
        """Test that unknown log levels are rejected."""
        with pytest.raises(PydanticValidationError):
            Config(log_level="LOUD")


class TestLogging:
    """Tests for structured logging setup."""

    def test_json_logs_on_stderr(self, capsys):
        """Test that structured logs are JSON lines on stderr."""
        configure_logging(Config(log_level="INFO", structured_logging=True))
        logger = get_logger("multijet.test", run="abc")
        log_command_execution(logger, "rho", {"seed": 1}, 12.5)
        captured = capsys.readouterr()
        assert captured.out == ""
        record = json.loads(captured.err.strip().splitlines()[-1])
        assert record["event"] == "Command execution completed"
        assert record["command"] == "rho"
        assert record["run"] == "abc"
        assert record["level"] == "info"

    def test_level_filter(self, capsys):
        """Test that records below the configured level are dropped."""
        configure_logging(Config(log_level="WARNING", structured_logging=True))
        get_logger("multijet.test").info("hidden")
        assert "hidden" not in capsys.readouterr().err
        assert logging.getLogger().level == logging.WARNING


class TestExceptions:
    """Tests for the error hierarchy and exit codes."""

    def test_input_errors_exit_3(self):
        """Test that validation and configuration errors map to exit code 3."""
        for error in (
            ValidationError("bad", field="x"),
            ConfigurationError("bad"),
            DimensionMismatchError(2, 3),
            SmoothnessError(5, 2),
            UnknownFunctionError("tan", ["sin", "cos"]),
            CapExceededError("max_trials", 10, 5),
        ):
            assert error.exit_code == EXIT_INPUT_ERROR

    def test_degeneracy_exits_4(self):
        """Test that numerical degeneracy maps to exit code 4."""
        assert RankDeficientError(2, 3).exit_code == EXIT_NUMERICAL_DEGENERACY
        assert DegenerateConditioningError(0.0).exit_code == EXIT_NUMERICAL_DEGENERACY

    def test_acceptance_failure_exits_2(self):
        """Test that failed acceptance checks map to exit code 2."""
        error = AcceptanceFailure(["determinism"])
        assert error.exit_code == EXIT_VALIDATION_FAILURE
        assert error.details == {"failed": ["determinism"]}

    def test_to_dict(self):
        """Test the report serialisation with codes and details."""
        payload = DimensionMismatchError(2, 3, field="points").to_dict()
        assert payload["code"] == "DIMENSION_MISMATCH"
        assert payload["details"] == {"field": "points", "expected": 2, "got": 3}

    def test_unknown_function_lists_known_ids(self):
        """Test that the message names the known ids in sorted order."""
        error = UnknownFunctionError("tan", ["sin", "cos"])
        assert "cos, sin" in error.message
        assert error.details["known"] == ["cos", "sin"]

    def test_warning_codes(self):
        """Test the machine-readable warning codes."""
        assert ResolutionWarning.code == "RESOLUTION"
        assert IntegrabilityWarning.code == "INTEGRABILITY"
