"""Runtime configuration loaded from environment variables.

Settings are read with Pydantic Settings from ``MOPUL_*`` variables and an
optional ``.env`` file. Everything has a default, so an empty environment is valid.
"""

import os
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


def _default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))


class MopulSettings(BaseSettings):
    """Package configuration from environment variables.

    Example .env file:
        MOPUL_LOG_LEVEL=DEBUG
        MOPUL_THREADS=4
        MOPUL_TOL_GAP=1e-9
        MOPUL_OUT_DIR=runs
    """

    model_config = SettingsConfigDict(
        env_prefix="MOPUL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ===================================
    # Logging
    # ===================================
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO", description="Logging level"
    )

    # ===================================
    # Interior-point solver
    # ===================================
    tol_primal: float = Field(default=1e-8, gt=0, lt=1, description="Primal residual tolerance")
    tol_dual: float = Field(default=1e-8, gt=0, lt=1, description="Dual residual tolerance")
    tol_gap: float = Field(default=1e-8, gt=0, lt=1, description="Relative duality gap tolerance")
    max_iters: int = Field(default=200, ge=1, le=10_000, description="Iteration cap")
    psd_side_cap: int = Field(
        default=50, ge=1, description="Largest PSD block side the dense solver accepts"
    )
    kkt_regularization: float = Field(
        default=1e-9, gt=0, lt=1e-3, description="Static diagonal regularization of the KKT matrix"
    )
    step_fraction: float = Field(
        default=0.99, gt=0.5, lt=1.0, description="Fraction-to-boundary step factor"
    )

    # ===================================
    # Model defaults
    # ===================================
    omega_upper: float = Field(
        default=1e4, gt=0, description="Upper bound appended to a variable control level"
    )

    # ===================================
    # Experiments / output
    # ===================================
    threads: int = Field(
        default_factory=_default_threads, ge=1, le=256, description="Worker threads for sweeps"
    )
    out_dir: str = Field(default="runs", description="Default output directory")

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Accept lowercase level names."""
        return v.upper() if isinstance(v, str) else v


def load_config() -> MopulSettings:
    """Load and validate configuration from environment.

    Raises:
        ValidationError: If a variable is set to an invalid value

    Example:
        >>> config = load_config()
        >>> print(f"Threads: {config.threads}")
    """
    return MopulSettings()


if __name__ == "__main__":
    """Configuration validation CLI.

    Usage: python -m mopul_sdp.config
    """
    import sys

    try:
        config = load_config()
        print("✓ Configuration loaded successfully\n")
        print(f"✓ Log level: {config.log_level}")
        print(
            f"✓ Solver tolerances: primal={config.tol_primal:g} dual={config.tol_dual:g} "
            f"gap={config.tol_gap:g}"
        )
        print(f"✓ Max iterations: {config.max_iters}")
        print(f"✓ PSD side cap: {config.psd_side_cap}")
        print(f"✓ Omega upper bound: {config.omega_upper:g}")
        print(f"✓ Threads: {config.threads}")
        print(f"✓ Output directory: {config.out_dir}")
        print("\nAll configuration checks passed ✓")
        sys.exit(0)
    except Exception as e:
        print(f"✗ Configuration validation failed:\n{e}")
        sys.exit(1)
