import math
from typing import List, Tuple

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    PROJECT_NAME: str = "ValDist API"
    DESCRIPTION: str = "Distribution des valeurs pour les opérateurs de Schrödinger sur la demi-droite"
    VERSION: str = "0.1.0"
    API_PREFIX: str = "/api"
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    CORS_ORIGINS: List[str] = ["http://localhost", "http://localhost:3000"]

    # Intégrateur (solve_ivp, DOP853)
    REL_TOL: float = 1e-10
    ABS_TOL: float = 1e-12
    MAX_STEP: float = math.inf
    SEGMENT_LENGTH: float = 100.0
    # Balayages vectorisés sur une grille en lambda
    SWEEP_REL_TOL: float = 1e-9
    SWEEP_ABS_TOL: float = 1e-11

    POLE_TOL: float = 1e-12
    X_SCHEDULE: Tuple[float, ...] = (25.0, 50.0, 100.0, 200.0, 400.0)
    EPS_SCHEDULE: Tuple[float, ...] = (1.0, 0.1, 0.01, 0.001)

    # Raccordement à l'infini (coefficients de connexion)
    MATCH_DECAY_RATIO: float = 1e-3
    MATCH_BASE: float = 50.0
    LOW_CONFIDENCE: float = 1e-4

    BESSEL_SWITCH_X: float = 20.0
    BESSEL_DPS: int = 50

    CSV_DIGITS: int = 12
    LOG_LEVEL: str = "INFO"
    THREADS: int = 0

    model_config = SettingsConfigDict(env_file=".env", env_prefix="VALDIST_", extra="ignore")


settings = Settings()
