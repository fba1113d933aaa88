"""Run configuration and persisted run records."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError, HarnessIOError
from ..eval.metrics import VARIANTS
from ..plugin.manifest import BUILTIN_PREFIX
from ..plugin.protocol import DEFAULT_TIMEOUT

DEFAULT_TRAINER = "builtin:sim"
RUN_ROOT_ENV = "HARNESS_RUN_ROOT"

# Fields that may differ between runs compared on one leaderboard.
METHOD_FIELDS = ("method", "method_params", "name")


@dataclass(frozen=True)
class StopCriteria:
    max_iterations: int | None = 4
    stop_size: int | None = None

    def to_dict(self) -> dict:
        return {"max_iterations": self.max_iterations, "stop_size": self.stop_size}


@dataclass(frozen=True)
class RunConfig:
    """One method on one pool.

    Defaults follow the reference protocol: 1000 initial images, 1000 added per
    iteration, four iterations, IoU 0.5.
    """

    pool: str
    method: str
    n_initial: int = 1000
    k_per_iteration: int = 1000
    stop: StopCriteria = field(default_factory=StopCriteria)
    seed: int = 0
    trainer: str = DEFAULT_TRAINER
    method_params: dict = field(default_factory=dict)
    trainer_params: dict = field(default_factory=dict)
    iou_threshold: float = 0.5
    ap_variant: str = "all_points"
    include_difficult: bool = False
    retrain_default: bool = True
    timeout: float = DEFAULT_TIMEOUT
    dataset: str | None = None
    name: str | None = None
    pool_sha256: str | None = None

    def __post_init__(self) -> None:
        if self.n_initial < 0:
            raise ConfigError("n_initial must be >= 0")
        if self.k_per_iteration < 1:
            raise ConfigError("k_per_iteration must be >= 1")
        if self.stop.max_iterations is not None and self.stop.max_iterations < 0:
            raise ConfigError("stop.max_iterations must be >= 0")
        if self.stop.stop_size is not None and self.stop.stop_size < 0:
            raise ConfigError("stop.stop_size must be >= 0")
        if self.ap_variant not in VARIANTS:
            raise ConfigError(f"ap_variant must be one of {VARIANTS}")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError("iou_threshold must lie in (0, 1]")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    @property
    def method_name(self) -> str:
        if self.name:
            return self.name
        if self.method.startswith(BUILTIN_PREFIX):
            return self.method[len(BUILTIN_PREFIX):]
        return Path(self.method).parent.name or self.method

    @property
    def dataset_name(self) -> str:
        return self.dataset or Path(self.pool).stem

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset_name,
            "name": self.method_name,
            "pool": self.pool,
            "pool_sha256": self.pool_sha256,
            "method": self.method,
            "method_params": self.method_params,
            "trainer": self.trainer,
            "trainer_params": self.trainer_params,
            "n_initial": self.n_initial,
            "k_per_iteration": self.k_per_iteration,
            "stop": self.stop.to_dict(),
            "seed": self.seed,
            "iou_threshold": self.iou_threshold,
            "ap_variant": self.ap_variant,
            "include_difficult": self.include_difficult,
            "retrain_default": self.retrain_default,
            "timeout": self.timeout,
        }

    def comparable(self) -> dict:
        data = self.to_dict()
        for key in METHOD_FIELDS:
            data.pop(key, None)
        return data

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__) - {"methods"}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        for key in ("pool", "method"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        stop = data.get("stop", {})
        if not isinstance(stop, dict):
            raise ConfigError("stop must be an object")
        data["stop"] = StopCriteria(stop.get("max_iterations", 4), stop.get("stop_size"))
        data.pop("methods", None)
        pool = Path(data["pool"])
        if base_dir is not None and not pool.is_absolute():
            pool = base_dir / pool
        data["pool"] = str(pool.resolve()) if base_dir is not None else str(pool)
        method = data["method"]
        if base_dir is not None and not method.startswith(BUILTIN_PREFIX) and not Path(method).is_absolute():
            data["method"] = str((base_dir / method).resolve())
        trainer = data.get("trainer", DEFAULT_TRAINER)
        if base_dir is not None and not trainer.startswith(BUILTIN_PREFIX) and not Path(trainer).is_absolute():
            data["trainer"] = str((base_dir / trainer).resolve())
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def expand_methods(data: dict) -> list[dict]:
    """A config may list ``methods``; each becomes its own run config."""
    if "methods" not in data:
        return [data]
    out = []
    for m in data["methods"]:
        item = {k: v for k, v in data.items() if k != "methods"}
        if isinstance(m, str):
            item["method"] = m
        else:
            item.update(m)
        out.append(item)
    return out


def load_config_file(path: Path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8")), path.resolve().parent
    except OSError as exc:
        raise HarnessIOError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json_atomic(path: Path, obj: Any) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(dump_json(obj), encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise HarnessIOError(f"cannot write {path}: {exc}") from None


def run_root() -> Path:
    return Path(os.environ.get(RUN_ROOT_ENV, "runs"))
