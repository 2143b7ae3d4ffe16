"""
Process-level settings read from the environment (and an optional .env file).

Nothing here changes a numeric result; analysis parameters are RunConfig flags.
"""
import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field


class Settings(BaseModel):
    lang: str = Field(default="en", description="message catalog under locales/")
    log_level: str = Field(default="WARNING")
    workers: int = Field(default=1, ge=1, description="threads for trials and pair chunks")
    chunk_pairs: int = Field(default=65536, ge=1, description="pairs per h-matrix work unit")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Loads .env next to this file (if any) without overriding real environment variables."""
    load_dotenv(Path(__file__).parent / ".env", override=False)
    return Settings(
        lang=os.getenv("MMDINF_LANG", "en"),
        log_level=os.getenv("MMDINF_LOG_LEVEL", "WARNING").upper(),
        workers=int(os.getenv("MMDINF_WORKERS", "1")),
        chunk_pairs=int(os.getenv("MMDINF_CHUNK_PAIRS", "65536")),
    )
