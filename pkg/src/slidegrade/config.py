"""Flat key-value configuration merged from defaults, file, env and flags.

Precedence (highest wins): CLI flags > environment > config file > defaults.
The config file is plain JSON at the path named by ``SLIDEGRADE_CONFIG`` (or
``--config``). Unknown keys in the file are rejected. Environment variables
use the ``SLIDEGRADE_`` prefix, except the provider family which also honors
the documented bare names (``PROVIDER_URL``, ``PROVIDER_MODEL``,
``PROVIDER_API_KEY_ENV``, ``PROVIDER_TIMEOUT_S``, ``MAX_REPAIR_ATTEMPTS``
and the price pair).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

# Config keys that may also be set through these bare env var names.
_BARE_ENV_ALIASES = {
    "PROVIDER_URL": "provider_url",
    "PROVIDER_MODEL": "provider_model",
    "PROVIDER_API_KEY_ENV": "provider_api_key_env",
    "PROVIDER_PRICE_PER_1K_INPUT_USD": "price_per_1k_input_usd",
    "PROVIDER_PRICE_PER_1K_OUTPUT_USD": "price_per_1k_output_usd",
    "PROVIDER_TIMEOUT_S": "provider_timeout_s",
    "MAX_REPAIR_ATTEMPTS": "max_repair_attempts",
}


@dataclass
class AppConfig:
    # storage
    data_dir: str = "./slidegrade-data"

    # upload / zip-bomb guards
    max_upload_bytes: int = 50 * 1024 * 1024
    max_inflation_ratio: float = 100.0
    max_zip_parts: int = 10_000

    # deck parsing defaults
    default_font_size_pt: float = 18.0
    default_font_name: str = "Calibri"
    slide_number_bottom_fraction: float = 0.15

    # image characterization
    edge_gradient_threshold: float = 100.0
    color_quant_bits: int = 4
    photo_color_min: int = 512
    logo_color_max: int = 16
    logo_edge_max: float = 0.25

    # provider
    provider_url: str = "mock"
    provider_model: str = "mock-evaluator"
    provider_api_key_env: str = "SLIDEGRADE_PROVIDER_API_KEY"
    price_per_1k_input_usd: float = 0.0025
    price_per_1k_output_usd: float = 0.0075
    provider_timeout_s: float = 60.0
    max_repair_attempts: int = 2
    provider_concurrency: int = 4

    # pipeline
    worker_count: int = 4
    lease_timeout_s: float = 900.0  # 15 min dedup-lock / worker-lease staleness

    # analytics
    review_session_timeout_s: float = 120.0
    heartbeat_cadence_s: float = 30.0

    # password KDF (scrypt) cost parameters
    kdf_log2_n: int = 14
    kdf_r: int = 8
    kdf_p: int = 1

    # api
    bind_host: str = "127.0.0.1"
    bind_port: int = 8040
    session_ttl_s: float = 12 * 3600.0
    cors_origin: str = ""
    login_attempts_per_minute: int = 5
    requests_per_minute: int = 600
    max_json_body_bytes: int = 1024 * 1024
    request_read_timeout_s: float = 30.0
    audit_log_path: str = ""  # empty: log via stdlib logging only
    ui_dist_dir: str = ""  # serve the built SPA from here when set

    def replace(self, **kwargs) -> "AppConfig":
        return dataclasses.replace(self, **kwargs)


_FIELDS = {f.name: f for f in dataclasses.fields(AppConfig)}


def _coerce(key: str, raw, source: str):
    typ = _FIELDS[key].type if isinstance(_FIELDS[key].type, type) else type(_FIELDS[key].default)
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r} from {source}: {raw!r}") from exc


def load_config(
    config_path: str | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> AppConfig:
    """Build the merged config; raises ConfigError on unknown keys or bad values."""
    env = os.environ if env is None else env
    values: dict = {}

    path = config_path or env.get("SLIDEGRADE_CONFIG")
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {path}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, val in raw.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[key] = _coerce(key, val, path)

    for key in _FIELDS:
        env_name = "SLIDEGRADE_" + key.upper()
        if env_name in env:
            values[key] = _coerce(key, env[env_name], env_name)
    for env_name, key in _BARE_ENV_ALIASES.items():
        if env_name in env:
            values[key] = _coerce(key, env[env_name], env_name)

    for key, val in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if val is not None:
            values[key] = _coerce(key, val, "flag")

    return AppConfig(**values)
