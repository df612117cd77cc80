"""Configuration management using pydantic-settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults loaded from environment variables (prefix PHASESHIFT_)."""

    # Quadrature
    tol_abs: float = 1e-10
    tol_rel: float = 1e-12
    element_tol: float = 1e-12
    pv_window: float = 1.0
    k_cut_margin: float = 40.0
    max_subdivisions: int = 200
    tail_max_panels: int = 5000

    # Discrete generator grid
    grid_nodes: int = 64

    # Radial solvers
    numerov_phase_step: float = 0.005  # p*h per Numerov step
    green_support_nodes: int = 4001
    fit_residual_gate: float = 1e-3

    # Runtime
    workers: int = 1
    log_level: str = "WARNING"
    environment: str = "development"

    model_config = SettingsConfigDict(
        env_prefix="PHASESHIFT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


# Singleton instance
settings = Settings()
