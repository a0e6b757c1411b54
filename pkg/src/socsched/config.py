"""Run configuration: one JSON file naming the catalog and platform files."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .platform import Platform
from .workload import JobTypeCatalog

DATA_DIR = Path(str(resources.files("socsched") / "data"))
DEFAULT_CATALOG = DATA_DIR / "default_catalog.json"
DEFAULT_PLATFORM = DATA_DIR / "default_platform.json"
DEFAULT_MODEL = DATA_DIR / "default_model.ckpt"

# generator settings that produced the frozen default catalog
DEFAULT_GEN_SEED = 7
DEFAULT_TYPE_EXEC_SCALE = (0.6, 1.0, 1.6)


@dataclass
class SimConfig:
    catalog: str = str(DEFAULT_CATALOG)
    platform: str = str(DEFAULT_PLATFORM)
    horizon: int = 5000
    scale: float = 25.0
    queue_capacity: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.queue_capacity < 0:
            raise ValueError("queue_capacity must be non-negative")

    def load_catalog(self) -> JobTypeCatalog:
        return JobTypeCatalog.load(self.catalog)

    def load_platform(self) -> Platform:
        return Platform.load(self.platform)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        path = Path(path)
        data = json.loads(path.read_text())
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls(**data)
        # relative file references resolve against the config's directory
        for key in ("catalog", "platform"):
            p = Path(getattr(cfg, key))
            if not p.is_absolute():
                setattr(cfg, key, str((path.parent / p).resolve()))
        cfg.validate()
        return cfg

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")
