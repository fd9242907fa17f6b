"""
Environment-driven settings.

STOKES_OUTPUT_DIR overrides the output directory of every command,
STOKES_LOG_LEVEL sets the root log level of the command-line driver.
"""

from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings read from the environment."""
    model_config = SettingsConfigDict(env_prefix="STOKES_")

    output_dir: Optional[Path] = None
    log_level: str = "INFO"


def get_settings() -> Settings:
    """Read settings fresh from the current environment."""
    return Settings()
