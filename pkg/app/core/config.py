from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="HILMOD_")

    PROJECT_NAME: str = "Hilmod"
    API_V1_STR: str = "/api/v1"

    # Numerical zero / rank threshold, relative to max(1, scale of the operands)
    TOL: float = 1e-9

    SEED: int = 0
    TRIALS: int = 100
    MAX_ORDER: int = 5

    LOG_LEVEL: str = "WARNING"


settings = Settings()  # pyright: ignore[reportCallIssue]
