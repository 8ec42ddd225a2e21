"""Service and CLI configuration, loaded from a JSON file with defaults.

The only secret (the completion-provider credential) never lives in the file;
the file names the environment variable that holds it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass
class BackendSettings:
    kind: str = "stub"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    timeout_s: float = 30.0
    temperature: float = 0.0
    api_key_env: str = "TRIAGE_LLM_API_KEY"


@dataclass
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 8700
    static_dir: Optional[str] = None


@dataclass
class ReportSettings:
    replicates: int = 10_000
    seed: int = 12345


@dataclass
class AppConfig:
    log_dir: str = "./triage_logs"
    backend: BackendSettings = field(default_factory=BackendSettings)
    service: ServiceSettings = field(default_factory=ServiceSettings)
    report: ReportSettings = field(default_factory=ReportSettings)


def _apply_section(target, data: dict, section: str) -> None:
    known = set(vars(target))
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown keys in config section '{section}': {sorted(unknown)}")
    for key, value in data.items():
        setattr(target, key, value)


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    config = AppConfig()
    if path is None:
        return config
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"config file not found: {file_path}")
    data = json.loads(file_path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    sections = {"backend": config.backend, "service": config.service, "report": config.report}
    top_unknown = set(data) - set(sections) - {"log_dir"}
    if top_unknown:
        raise ValueError(f"unknown top-level config keys: {sorted(top_unknown)}")
    if "log_dir" in data:
        config.log_dir = str(data["log_dir"])
    for name, target in sections.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ValueError(f"config section '{name}' must be an object")
            _apply_section(target, data[name], name)
    return config
