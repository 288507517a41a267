import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="ZZLAB_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Simulation defaults
    default_levels: int = Field(7, description="Levels kept per transmon")
    default_step_ns: float = Field(0.05, description="Propagator step in ns")
    seed: int = Field(7, description="Default seed for synthetic data")

    # Runs
    output_dir: str = Field("./runs", description="Default output directory")
    jobs: int = Field(0, description="Worker processes for sweeps; 0 = all processors")
    log_level: str = Field("INFO")

    # API
    api_host: str = Field("0.0.0.0")
    api_port: int = Field(8000)
    debug: bool = Field(False)

    # App
    app_name: str = Field("Stark ZZ Lab")
    version: str = Field("1.0.0")

    def resolved_jobs(self, jobs: int | None = None) -> int:
        """Worker count, with 0/None meaning every available processor"""
        value = self.jobs if jobs is None else jobs
        if value and value > 0:
            return value
        return os.cpu_count() or 1


settings = Settings()
