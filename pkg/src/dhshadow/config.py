from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import InputError


@dataclass(frozen=True)
class Config:
    eps_eq: float = 1e-9
    eps_root: float = 1e-10
    eps_flag: float = 1e-8
    eps_rel: float = 1e-9
    eps_path: float = 1e-6
    window_anchor: float = 0.0
    grid_resolution: int = 400
    seed: int = 0

    def __post_init__(self):
        for name in ("eps_eq", "eps_root", "eps_flag", "eps_rel", "eps_path"):
            if not getattr(self, name) > 0:
                raise InputError(f"config: {name} must be > 0")
        if self.grid_resolution < 2:
            raise InputError("config: grid_resolution must be >= 2")

    def updated(self, **overrides) -> "Config":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides)

    @classmethod
    def from_file(cls, path) -> "Config":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError(f"config {path}: top level must be an object")
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise InputError(f"config {path}: unknown keys {sorted(unknown)}")
        return cls(**data)


DEFAULT = Config()
