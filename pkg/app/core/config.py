from pydantic_settings import BaseSettings, SettingsConfigDict
import os
from pathlib import Path
from dotenv import load_dotenv


# Load appropriate .env file based on environment
env_file = ".env.test" if os.getenv("APP_ENV") == "test" else ".env"
load_dotenv(env_file)

PACKAGE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="RTLAB_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Application
    APP_NAME: str = "Racetrack Lab"
    APP_VERSION: str = "1.0.0"
    APP_DESCRIPTION: str = (
        "Racetrack MDP, A* expert and imitation / deep Q-learning pipelines"
    )
    APP_ENV: str = "development"
    LOG_LEVEL: str = "INFO"

    # Server
    HOST: str = "0.0.0.0"
    PORT: int = 8000

    # Prometheus
    PROMETHEUS_ENABLED: bool = False

    # Reproductibilité (RTLAB_SEED)
    SEED: int = 0
    JOBS: int = 1

    # Cartes
    MAPS_DIR: Path = PACKAGE_DIR / "maps"

    # Protocole d'évaluation et de génération
    RUNS: int = 10_000
    STEP_CAP: int = 1000
    DATASET_SIZE: int = 100_000
    VELOCITY_BOUND: int = 5
    GAMMA: float = 0.99


settings = Settings()
