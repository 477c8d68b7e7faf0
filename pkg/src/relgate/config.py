"""Service/CLI configuration: YAML file with environment overrides.

File keys::

    port: 8080
    data_dir: data
    workers: 4
    backend:
      kind: scripted | http
      fixtures: fixtures.json        # scripted
      endpoint: https://...          # http
      credential_env: API_KEY_VAR    # http; the variable NAME, never a secret
      model: some-model
      timeout_s: 60
      max_retries_transport: 2

Environment overrides use the RELGATE_ prefix: RELGATE_PORT,
RELGATE_DATA_DIR, RELGATE_WORKERS, RELGATE_BACKEND_KIND,
RELGATE_BACKEND_FIXTURES, RELGATE_BACKEND_ENDPOINT,
RELGATE_BACKEND_CREDENTIAL_ENV, RELGATE_BACKEND_MODEL,
RELGATE_BACKEND_TIMEOUT_S.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .gateway import BackendConfig


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8080
    data_dir: str = "data"
    workers: int = 4
    backend: BackendConfig = field(
        default_factory=lambda: BackendConfig(kind="scripted")
    )

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.port < 65536:
            raise ConfigError(f"bad port {self.port}")


def _backend_from_raw(raw: Mapping[str, Any]) -> BackendConfig:
    try:
        return BackendConfig(
            kind=str(raw.get("kind", "scripted")),
            endpoint=str(raw.get("endpoint", "")),
            credential_env=str(raw.get("credential_env", "")),
            model=str(raw.get("model", "")),
            timeout_s=float(raw.get("timeout_s", 60.0)),
            max_retries_transport=int(raw.get("max_retries_transport", 2)),
            fixtures_path=str(raw.get("fixtures", "")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceConfig:
    """Load config file (if given), then apply RELGATE_* env overrides."""
    env = env if env is not None else os.environ
    raw: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            loaded = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a mapping")
            raw = loaded

    backend_raw = dict(raw.get("backend") or {})
    mapping = {
        "RELGATE_BACKEND_KIND": "kind",
        "RELGATE_BACKEND_FIXTURES": "fixtures",
        "RELGATE_BACKEND_ENDPOINT": "endpoint",
        "RELGATE_BACKEND_CREDENTIAL_ENV": "credential_env",
        "RELGATE_BACKEND_MODEL": "model",
        "RELGATE_BACKEND_TIMEOUT_S": "timeout_s",
    }
    for var, key in mapping.items():
        if env.get(var):
            backend_raw[key] = env[var]

    try:
        port = int(env.get("RELGATE_PORT") or raw.get("port", 8080))
        workers = int(env.get("RELGATE_WORKERS") or raw.get("workers", 4))
    except ValueError as exc:
        raise ConfigError(f"bad numeric config value: {exc}") from None
    data_dir = env.get("RELGATE_DATA_DIR") or str(raw.get("data_dir", "data"))
    return ServiceConfig(
        port=port,
        data_dir=data_dir,
        workers=workers,
        backend=_backend_from_raw(backend_raw),
    )
