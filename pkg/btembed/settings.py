from pathlib import Path
from typing import Annotated, Literal

from pydantic import AfterValidator, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from sympy import isprime


def _post_fiddle_path(p: Path) -> Path:
    return p.expanduser().absolute()


class Settings(BaseSettings):
    # Where log records go. See `cli._setup_logging`.
    enable_stderr_logging: bool = True

    enable_log_file: bool = False
    log_file: Annotated[
        Path,
        AfterValidator(_post_fiddle_path),
    ] = Path("~/.btembed/btembed.log")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "FATAL", "CRITICAL"] = "INFO"

    # Residual characteristic used when a scenario does not name one.
    default_prime: int = 3

    # Grid used by the uniqueness search: apartment coordinates in (1/N)Z inside
    # [-R, R]. The radius is a rational written as a string like "1/2".
    grid_denominator: int = 8
    grid_radius: str = "1/2"

    # Number of worker processes for the grid search. None picks half the cores,
    # 1 runs everything in-process.
    search_workers: int | None = None
    # Candidates handed to each worker in one go.
    search_chunk_size: int = 16

    # Randomised property checks. Same seed, same report.
    property_seed: int = 0
    property_samples: int = 20

    # Default indentation when serialising a report to JSON.
    default_response_indent: int | Literal["no_indent"] = 2

    # Largest dimension the Witt decomposition will attempt.
    max_witt_dimension: int = 8

    model_config = SettingsConfigDict(
        env_prefix="BTEMBED_",
        validate_default=True,
        frozen=True,
    )

    @field_validator("default_prime")
    @classmethod
    def _odd_prime(cls, v: int) -> int:
        if not isprime(v) or v == 2:
            raise ValueError(f"default_prime must be an odd prime, got {v}")
        return v

    @field_validator("grid_denominator", "property_samples", "search_chunk_size")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be positive, got {v}")
        return v
