import os
from typing import Optional

from pydantic import BaseModel, Field


class RuntimeSettings(BaseModel):
    """Run-time knobs that never change results, read from the environment after .env is loaded."""
    workers: int = Field(default=1, ge=1)
    out_dir: str = "results"
    results_db: str = "results/results.db"
    log_level: str = "INFO"

    @classmethod
    def from_env(cls, environ: Optional[dict] = None) -> "RuntimeSettings":
        env = os.environ if environ is None else environ
        values = {
            "workers": env.get("MILSTEIN_WORKERS"),
            "out_dir": env.get("MILSTEIN_OUT_DIR"),
            "results_db": env.get("MILSTEIN_RESULTS_DB"),
            "log_level": env.get("MILSTEIN_LOG_LEVEL"),
        }
        return cls(**{k: v for k, v in values.items() if v})
