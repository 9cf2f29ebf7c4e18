from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="TWISTCOH_")

    app_name: str = "twistcoh"
    debug: bool = False
    log_json: bool = False

    bar_size_cap: int = 10**6
    default_q: str = "2"
    complexity_window: int = 12
    iso_search_box: int = 3
    iso_random_trials: int = 200
    seed: int = 0

    otlp_endpoint: str = "http://localhost:4317"
    otlp_enabled: bool = False


settings = Settings()
