import os
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from willmore_lab.exceptions import ConfigError

load_dotenv()


class LabSettings(BaseModel):
    threads: int = Field(..., ge=1, le=512, description="Worker threads for grid evaluation")
    log_dir: str = Field("logs", description="Directory of the event log file; empty disables it")
    r_min: float = Field(1e-6, gt=0, lt=1e-2, description="Exclusion radius around marked punctures")
    logfire_token: Optional[str] = None


def _read_number(name: str, default, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ConfigError(
            f"{name} environment variable must be a {cast.__name__}, got {raw!r}",
            {"variable": name},
        )


def load_settings() -> LabSettings:
    """Read settings from the environment (and a .env file if present)."""
    threads = _read_number("WILLMORE_LAB_THREADS", os.cpu_count() or 1, int)
    r_min = _read_number("WILLMORE_LAB_R_MIN", 1e-6, float)
    try:
        return LabSettings(
            threads=threads,
            log_dir=os.getenv("WILLMORE_LAB_LOG_DIR", "logs"),
            r_min=r_min,
            logfire_token=os.getenv("LOGFIRE_API_KEY"),
        )
    except ValidationError as e:
        raise ConfigError(
            f"Invalid willmore-lab environment settings: {e.errors()[0]['loc'][0]} "
            f"{e.errors()[0]['msg']}",
            {"errors": [err["msg"] for err in e.errors()]},
        )


@lru_cache(maxsize=1)
def get_settings() -> LabSettings:
    return load_settings()
