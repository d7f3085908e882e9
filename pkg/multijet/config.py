"""
Configuration for multijet.

This module handles environment variables and configuration settings for
the numerical library and its command-line interface.
"""

import os

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .exceptions import ConfigurationError


class Config(BaseModel):
    """Configuration model for multijet."""

    # Logging
    log_level: str = Field("INFO", description="Logging level")
    structured_logging: bool = Field(True, description="Use structured logging")

    # Worker pool
    threads: int = Field(1, ge=1, le=256, description="Worker threads")
    chunk_size: int = Field(
        4096,
        ge=64,
        description="Draws per seeded chunk (fixed so results ignore thread count)",
    )

    # Monte Carlo
    mc_samples: int = Field(
        100_000, ge=100, description="Default Monte Carlo samples per density"
    )
    bootstrap_resamples: int = Field(
        1000, ge=10, description="Bootstrap resamples for moment standard errors"
    )

    # Quadrature and linear algebra tolerances
    quadrature_tol: float = Field(
        1e-9, gt=0, description="Absolute tolerance of adaptive simplex quadrature"
    )
    quadrature_max_depth: int = Field(
        24, ge=1, description="Maximum bisection depth of adaptive quadrature"
    )
    cluster_tol_factor: float = Field(
        1e-9,
        ge=0,
        description="Cluster tolerance relative to (configuration diameter + 1)",
    )
    certification_threshold: float = Field(
        1e-8, gt=0, description="Minimum eigenvalue certifying non-degeneracy"
    )
    psd_jitter: float = Field(
        1e-12, ge=0, description="Diagonal jitter (relative to trace/N)"
    )

    # Empirics
    grid_spacing: float = Field(
        0.02,
        gt=0,
        le=0.05,
        description="Sampling grid spacing in correlation lengths",
    )

    # Desk-scale caps
    max_trials: int = Field(50_000, ge=1, description="Cap on simulated trials")
    max_stacked_dim: int = Field(
        2000, ge=1, description="Cap on the stacked dimension of sampled jets"
    )
    max_mc_samples: int = Field(
        2_000_000, ge=1, description="Cap on Monte Carlo samples per density"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate that the log level is a standard logging level name."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"log_level must be a logging level name, got {v}")
        return level

    model_config = ConfigDict(env_prefix="MULTIJET_")


def load_config(**overrides) -> Config:
    """
    Load configuration from environment variables.

    Args:
        **overrides: Values that take precedence over the environment

    Returns:
        Configured Config instance

    Raises:
        ConfigurationError: If configuration is invalid
    """
    try:
        config_data = {}

        # Logging
        if log_level := os.getenv("MULTIJET_LOG_LEVEL"):
            config_data["log_level"] = log_level.upper()

        if structured_logging := os.getenv("MULTIJET_STRUCTURED_LOGGING"):
            config_data["structured_logging"] = structured_logging.lower() == "true"

        # Worker pool
        if threads := os.getenv("MULTIJET_THREADS"):
            config_data["threads"] = int(threads)

        if chunk_size := os.getenv("MULTIJET_CHUNK_SIZE"):
            config_data["chunk_size"] = int(chunk_size)

        # Monte Carlo
        if mc_samples := os.getenv("MULTIJET_MC_SAMPLES"):
            config_data["mc_samples"] = int(mc_samples)

        if bootstrap_resamples := os.getenv("MULTIJET_BOOTSTRAP_RESAMPLES"):
            config_data["bootstrap_resamples"] = int(bootstrap_resamples)

        # Tolerances
        if quadrature_tol := os.getenv("MULTIJET_QUADRATURE_TOL"):
            config_data["quadrature_tol"] = float(quadrature_tol)

        if quadrature_max_depth := os.getenv("MULTIJET_QUADRATURE_MAX_DEPTH"):
            config_data["quadrature_max_depth"] = int(quadrature_max_depth)

        if cluster_tol_factor := os.getenv("MULTIJET_CLUSTER_TOL_FACTOR"):
            config_data["cluster_tol_factor"] = float(cluster_tol_factor)

        if certification_threshold := os.getenv("MULTIJET_CERTIFICATION_THRESHOLD"):
            config_data["certification_threshold"] = float(certification_threshold)

        if psd_jitter := os.getenv("MULTIJET_PSD_JITTER"):
            config_data["psd_jitter"] = float(psd_jitter)

        if grid_spacing := os.getenv("MULTIJET_GRID_SPACING"):
            config_data["grid_spacing"] = float(grid_spacing)

        # Caps
        if max_trials := os.getenv("MULTIJET_MAX_TRIALS"):
            config_data["max_trials"] = int(max_trials)

        if max_stacked_dim := os.getenv("MULTIJET_MAX_STACKED_DIM"):
            config_data["max_stacked_dim"] = int(max_stacked_dim)

        if max_mc_samples := os.getenv("MULTIJET_MAX_MC_SAMPLES"):
            config_data["max_mc_samples"] = int(max_mc_samples)

        config_data.update({k: v for k, v in overrides.items() if v is not None})
        return Config(**config_data)

    except ValueError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e
