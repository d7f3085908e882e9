"""
Shared type definitions for multijet.

This module contains the Pydantic models used for experiment configuration,
command requests and run manifests. Every experiment model rejects unknown
fields so that misspelt configuration keys fail loudly.
"""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StrictModel(BaseModel):
    """Base model that rejects unknown fields."""

    model_config = ConfigDict(extra="forbid")


class FunctionSpec(StrictModel):
    """Function chosen from the built-in registry."""

    name: str = Field(..., description="poly, monomial, sin, cos, exp or gaussian")
    n: int = Field(1, ge=1, le=6, description="Ambient dimension")
    coeffs: list[float] = Field(
        default_factory=list, description="Graded-lex coefficients (poly)"
    )
    exponents: list[int] | None = Field(None, description="Exponents (monomial)")
    direction: list[float] | None = Field(
        None, description="Direction a of the affine form a.x + b (sin/cos/exp)"
    )
    offset: float = Field(0.0, description="Offset b of the affine form")
    scale: float = Field(1.0, description="Overall multiplicative constant")


class KernelSpec(StrictModel):
    """Covariance kernel specification {name, n, parameters}."""

    name: Literal["bargmann_fock", "berry", "spectral"] = Field(
        ..., description="Kernel family"
    )
    n: int = Field(1, ge=1, le=3, description="Dimension of the domain")
    parameters: dict[str, Any] = Field(
        default_factory=dict,
        description=(
            "Family parameters: max_jet (all), variance (all), "
            "atoms and weights (spectral)"
        ),
    )

    @model_validator(mode="after")
    def validate_family(self) -> "KernelSpec":
        if self.name == "berry" and self.n not in (1, 2):
            raise ValueError("the Berry kernel is available for n in {1, 2}")
        if self.name == "spectral" and "atoms" not in self.parameters:
            raise ValueError("the spectral kernel needs parameters.atoms")
        return self


class Box(StrictModel):
    """Axis-aligned box given by lower and upper corners."""

    lower: list[float] = Field(..., min_length=1, max_length=3)
    upper: list[float] = Field(..., min_length=1, max_length=3)

    @model_validator(mode="after")
    def validate_corners(self) -> "Box":
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper corners must have the same dimension")
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("upper corner must exceed lower corner in every coordinate")
        return self

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        v = 1.0
        for lo, hi in zip(self.lower, self.upper):
            v *= hi - lo
        return v

    @property
    def lengths(self) -> list[float]:
        return [hi - lo for lo, hi in zip(self.lower, self.upper)]


class RunOptions(StrictModel):
    """Options shared by every command."""

    seed: int = Field(20240611, ge=0, lt=2**64, description="Root seed")
    override_caps: bool = Field(False, description="Allow runs above desk-scale caps")


class DivdiffRequest(RunOptions):
    """Request for divided differences."""

    function: FunctionSpec
    points: str = Field(..., min_length=1, description="Point list")


class KerginRequest(DivdiffRequest):
    """Request for Kergin interpolation."""


class KernelRequest(RunOptions):
    """Request for the evaluation kernel of a configuration."""

    n: int | None = Field(None, ge=1, le=3, description="Ambient dimension (inferred if None)")
    points: str = Field(..., min_length=1)
    cells: list[list[int]] | None = Field(
        None, description="Optional partition (0-based cells) for intersection checks"
    )


class LimitRequest(RunOptions):
    """Request for a diagonal limit probe along a named path."""

    path: Literal["spiral", "symmetric", "constant"] = "spiral"
    epsilons: list[float] = Field(
        default_factory=lambda: [10.0**-e for e in range(1, 6)], min_length=1
    )

    @field_validator("epsilons")
    @classmethod
    def validate_epsilons(cls, v: list[float]) -> list[float]:
        if any(e <= 0 for e in v):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        return v


class NondegRequest(RunOptions):
    """Request for a p-non-degeneracy certificate."""

    kernel: KernelSpec
    order: int = Field(1, ge=0, le=4)
    components: int = Field(1, ge=1, le=3)


class RhoRequest(RunOptions):
    """Request for Kac-Rice densities."""

    kernel: KernelSpec
    components: int = Field(1, ge=1, le=3, description="Number of field components r")
    points: str | None = Field(None, description="Sites for rho_p; rho_1 at 0 if absent")
    samples: int | None = Field(None, ge=100, description="Monte Carlo samples")
    eps_grid: list[float] | None = Field(
        None, description="Diagonal-scaling probe grid (r=1)"
    )


class MomentsRequest(RunOptions):
    """Request for empirical moments and their Kac-Rice counterparts."""

    kernel: KernelSpec
    box: Box
    p_max: int = Field(2, ge=1, le=3)
    trials: int = Field(5000, ge=10)
    samples: int | None = Field(None, ge=100)
    critical_points: bool = Field(False, description="Count zeros of f' instead of f")
    kacrice: bool = Field(True, description="Compute the Kac-Rice references")
    doubling: bool = Field(
        False, description="Re-run with doubled trials and report moment drift"
    )


class SimulateRequest(RunOptions):
    """Request for plot-ready sampled paths."""

    kernel: KernelSpec
    box: Box
    paths: int = Field(3, ge=1, le=100)


class ValidateRequest(RunOptions):
    """Request for the acceptance suite."""

    trials: int | None = Field(None, ge=100, description="Trials for empirical checks")
    samples: int | None = Field(None, ge=100, description="Monte Carlo samples")
    only: list[int] | None = Field(None, description="Subset of criteria to run")


class RunManifest(BaseModel):
    """Provenance of one CLI run."""

    tool_version: str
    command: str
    config_sha256: str
    seed: int
    wall_time_s: float
    created_at: str
    outputs: dict[str, str] = Field(default_factory=dict, description="file -> sha256")


class CommandResult(BaseModel):
    """Tables and report produced by one command."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tables: dict[str, tuple[list[str], list[list[Any]]]] = Field(default_factory=dict)
    report: dict[str, Any] = Field(default_factory=dict)
    failures: list[str] = Field(
        default_factory=list, description="Failed acceptance checks (validate only)"
    )
