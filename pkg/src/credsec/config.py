"""Service configuration: one TOML or JSON file plus a few env overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

DEFAULT_DATA_DIR = "credsec-data"

# only deployment-location knobs are overridable from the environment
_ENV_KEYS = {
    "CREDSEC_DATA_DIR": ("data_dir", str),
    "CREDSEC_HOST": ("host", str),
    "CREDSEC_CMS_PORT": ("cms_port", int),
    "CREDSEC_CTA_PORT": ("cta_port", int),
    "CREDSEC_CTA_ENDPOINT": ("cta_endpoint", str),
}


@dataclass
class Config:
    data_dir: Path = Path(DEFAULT_DATA_DIR)
    host: str = "127.0.0.1"
    cms_port: int = 8470
    cta_port: int = 8471
    rsa_bits: int = 1024
    exponent_mode: str = "fixed"
    chunk_digits: int = 300
    dummy_budget: int = 16
    session_ttl: float = 3600.0
    # when set, `cms serve` talks to a remote authority instead of embedding one
    cta_endpoint: str | None = None

    @property
    def lds_root(self) -> Path:
        return self.data_dir / "lds"

    @property
    def ledger_path(self) -> Path:
        return self.data_dir / "ledger" / "chain.bin"


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> Config:
    """Defaults, overlaid with the config file, overlaid with env vars."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if path.suffix == ".json":
            values = json.loads(path.read_text())
        else:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
    env = os.environ if env is None else env
    for var, (key, cast) in _ENV_KEYS.items():
        if var in env:
            values[key] = cast(env[var])
    known = {f.name for f in fields(Config)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "data_dir" in values:
        values["data_dir"] = Path(values["data_dir"])
    return Config(**values)
