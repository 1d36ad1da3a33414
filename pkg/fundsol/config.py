from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application settings
    APP_NAME: str = "fundsol"
    APP_VERSION: str = "0.1.0"
    DEBUG: bool = False
    SEED: int = 20240521

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
    LOG_FILE: Optional[str] = None

    # Hypothesis (H) validation
    SAMPLE_BUDGET: int = 20000
    ZERO_TOLERANCE: float = 1e-9  # relative to sup |p| on the sphere
    GRADIENT_TOLERANCE: float = 1e-6  # relative to k * sup |p|
    WINDOW_FRACTION: float = 0.5

    # Sphere quadrature
    QUADRATURE_LEVEL_2D: int = 512
    QUADRATURE_LEVEL_3D: int = 256
    QUADRATURE_LEVEL_HIGH: int = 48
    DIMENSION_CAP: int = 6

    # Leray profiles
    MOLLIFIER_FRACTION: float = 0.125  # eta = fraction * epsilon
    FIT_DEGREE: int = 8
    FIT_POINTS: int = 33
    PROFILE_GRID_POINTS: int = 512

    # Log brackets
    CUTOFF_FRACTION: float = 0.5  # rho = fraction * epsilon
    LOG_PANELS: int = 25
    LOG_GAUSS_POINTS: int = 8
    OUTER_GAUSS_POINTS: int = 16

    # Radial integration
    TAIL_DIGITS: int = 14
    RADIAL_DECADES: int = 6
    RADIAL_PANELS_PER_DECADE: int = 16
    RADIAL_GRADED_POINTS: int = 2
    RADIAL_UNIFORM_PANELS: int = 32
    RADIAL_UNIFORM_POINTS: int = 8
    RADIAL_CORE: float = 0.5  # in units of 1/sigma
    TAIL_TOLERANCE: float = 1e-8

    # Laurent oracle
    LAURENT_SAMPLES: int = 16
    LAURENT_OFFSET: float = 0.02
    LAURENT_MAX_REGULAR: int = 8
    LAURENT_FIT_TOLERANCE: float = 1e-6
    CONDITION_THRESHOLD: float = 1e10
    ORACLE_JACOBI_POINTS: int = 48

    def quadrature_level(self, n: int) -> int:
        """Default sphere-rule level for S^{n-1}."""
        if n == 2:
            return self.QUADRATURE_LEVEL_2D
        if n == 3:
            return self.QUADRATURE_LEVEL_3D
        return self.QUADRATURE_LEVEL_HIGH

    model_config = SettingsConfigDict(
        env_prefix="FUNDSOL_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


# Create instance
settings = Settings()
