"""Configuration management using Pydantic Settings"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Run settings loaded from environment variables"""

    bandlimit: int = 32
    n_time: int = 64
    max_dense_bandlimit: int = 48

    eigen_gap_floor: float = 1e-10
    membership_tol: float = 1e-8

    collar_epsilon_cap: float = 0.1
    collar_safety: float = 0.1
    collar_max_doublings: int = 20

    bend_amplitude: float = 0.25
    bend_delta_ratio: float = 1.0 / 3.0
    bend_max_halvings: int = 20
    s0_max_halvings: int = 30
    glue_max_halvings: int = 30

    zoo_max_shrinks: int = 20
    zoo_max_n: int = 1024

    cap_radius: float = 0.02
    mesh_flat_edge: float = 0.05
    sweep_count: int = 24

    seed: int = 20240611
    num_threads: int = 1
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="HORIZON_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )


settings = Settings()
