"""Configuration management for singular BIC runs."""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

# Load environment variables from .env file
load_dotenv()

_LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


class SbicConfig(BaseModel):
    """Defaults shared by the model families, the experiment harness and the CLI."""

    threads: int = Field(
        default=1,
        description="Worker processes for restarts and replicates (1 runs inline)",
    )
    seed: Optional[int] = Field(
        default=None,
        description="Master seed used when a command is not given --seed",
    )
    mixture_restarts: int = Field(
        default=500,
        description="Random EM restarts per component count",
    )
    factor_restarts: int = Field(
        default=50,
        description="Random EM restarts per factor count",
    )
    variance_floor_scale: float = Field(
        default=1e-4,
        description="Mixture variance floor as a multiple of the sample variance",
    )
    uniqueness_floor_scale: float = Field(
        default=1e-4,
        description="Factor uniqueness floor as a multiple of diag(S)",
    )
    em_tolerance: float = Field(
        default=1e-8,
        description="Stop EM once the log-likelihood gain falls below this value",
    )
    em_max_iterations: int = Field(
        default=1000,
        description="Iteration cap for a single EM run",
    )
    log_level: str = Field(
        default="WARNING",
        description="Logging level name used by the command-line front end",
    )

    @field_validator("threads", "mixture_restarts", "factor_restarts", "em_max_iterations")
    @classmethod
    def validate_positive_int(cls, v: int) -> int:
        """Counts must be at least one."""
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("variance_floor_scale", "uniqueness_floor_scale", "em_tolerance")
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        """Scales and tolerances must be strictly positive."""
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate logging level name."""
        level = v.upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(_LOG_LEVELS)}")
        return level

    @property
    def logging_level(self) -> int:
        """Numeric logging level."""
        return int(getattr(logging, self.log_level))

    @classmethod
    def from_env(cls) -> "SbicConfig":
        """Create config from environment variables."""
        seed = os.getenv("SBIC_SEED")
        return cls(
            threads=int(os.getenv("SBIC_THREADS", "1")),
            seed=int(seed) if seed else None,
            mixture_restarts=int(os.getenv("SBIC_MIXTURE_RESTARTS", "500")),
            factor_restarts=int(os.getenv("SBIC_FACTOR_RESTARTS", "50")),
            variance_floor_scale=float(os.getenv("SBIC_VARIANCE_FLOOR_SCALE", "1e-4")),
            uniqueness_floor_scale=float(os.getenv("SBIC_UNIQUENESS_FLOOR_SCALE", "1e-4")),
            em_tolerance=float(os.getenv("SBIC_EM_TOLERANCE", "1e-8")),
            em_max_iterations=int(os.getenv("SBIC_EM_MAX_ITERATIONS", "1000")),
            log_level=os.getenv("SBIC_LOG_LEVEL", "WARNING"),
        )
