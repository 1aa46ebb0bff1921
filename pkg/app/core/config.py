"""
Application configuration settings.

Uses pydantic-settings to load from environment variables (and an optional
.env file). Every field has a default, so importing the global instance never
fails.
"""
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables."""

    # Parallelism (overrides --workers when set)
    SPILLOVER_FORGE_WORKERS: Optional[int] = None

    # Output Settings (with defaults)
    SPILLOVER_FORGE_LOG_LEVEL: str = "WARNING"
    SPILLOVER_FORGE_OUTPUT_DIR: str = "./results"
    SPILLOVER_FORGE_RECORD_TIMINGS: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    def resolve_workers(self, cli_workers: Optional[int]) -> int:
        """
        Resolve the effective worker count.

        Args:
            cli_workers: Value of --workers (None when not given)

        Returns:
            int: Environment override if set, else the flag, else 1
        """
        workers = self.SPILLOVER_FORGE_WORKERS or cli_workers or 1
        return max(1, int(workers))


# Global settings instance
settings = Settings()
