import os
from dotenv import load_dotenv, set_key, find_dotenv
from typing import Optional


class Settings:
    """Loads and provides access to library settings from the environment or a .env file."""

    def __init__(self):
        # Load environment variables from a .env file if it exists
        load_dotenv()

        # --- Logging ---
        self.LOG_LEVEL: str = os.getenv("MBSVM_LOG_LEVEL", "INFO").upper()
        self.LOG_FILE: Optional[str] = os.getenv("MBSVM_LOG_FILE") or None

        # --- Reference optimum cache ---
        self.REFERENCE_CACHE: str = os.getenv("MBSVM_REFERENCE_CACHE", ".mbsvm_reference.json")
        self.REFERENCE_GAP: float = float(os.getenv("MBSVM_REFERENCE_GAP", "1e-7"))
        self.REFERENCE_MAX_EPOCHS: int = int(os.getenv("MBSVM_REFERENCE_MAX_EPOCHS", "2000"))

        # --- Spectral norm estimation ---
        self.POWER_TOL: float = float(os.getenv("MBSVM_POWER_TOL", "1e-6"))
        self.POWER_MAX_ITER: int = int(os.getenv("MBSVM_POWER_MAX_ITER", "1000"))
        self.POWER_INFLATION: float = float(os.getenv("MBSVM_POWER_INFLATION", "1.02"))

        # --- Sweep ---
        self.MAX_WORKERS: int = int(os.getenv("MBSVM_MAX_WORKERS", "4"))

    def save_settings(self,
                      log_level: Optional[str] = None,
                      log_file: Optional[str] = None,
                      reference_cache: Optional[str] = None,
                      max_workers: Optional[int] = None):
        """Update settings and save to .env file"""
        env_path = find_dotenv(usecwd=True) or ".env"

        if log_level is not None:
            self.LOG_LEVEL = log_level.upper()
            set_key(env_path, "MBSVM_LOG_LEVEL", self.LOG_LEVEL)

        if log_file is not None:
            self.LOG_FILE = log_file or None
            set_key(env_path, "MBSVM_LOG_FILE", log_file)

        if reference_cache is not None:
            self.REFERENCE_CACHE = reference_cache
            set_key(env_path, "MBSVM_REFERENCE_CACHE", reference_cache)

        if max_workers is not None:
            self.MAX_WORKERS = max_workers
            set_key(env_path, "MBSVM_MAX_WORKERS", str(max_workers))


# Create a single instance of the settings to be used throughout the library
settings = Settings()
