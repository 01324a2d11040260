"""Suite configuration files (TOML) for the ``verify`` command.

A suite file holds a format version, a required seed, a worker count,
output paths, optional named regions and a list of ``[[experiment]]``
tables. Experiments may name a region from ``[regions]`` instead of
spelling it out; names are resolved on load. Keys in ``[defaults]`` apply
to every experiment that does not set them.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .estimators import ExperimentPlan

FORMAT_VERSION = "1"
OUTPUT_DIR_ENV = "LATPOISSON_OUTPUT_DIR"

__all__ = ["FORMAT_VERSION", "OUTPUT_DIR_ENV", "ConfigError", "SuiteConfig", "load_suite", "dump_suite", "output_path"]


class ConfigError(ValueError):
    """Malformed or unsupported suite file."""


@dataclass
class SuiteConfig:
    seed: int
    experiments: list[ExperimentPlan]
    workers: int = 1
    output: dict[str, str] = field(default_factory=dict)
    regions: dict[str, dict] = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != FORMAT_VERSION:
            raise ConfigError(f"unsupported format_version {self.format_version!r}; expected {FORMAT_VERSION!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        labels = [p.label for p in self.experiments]
        dup = sorted({x for x in labels if labels.count(x) > 1})
        if dup:
            raise ConfigError(f"duplicate experiment labels: {dup}")

    @classmethod
    def from_dict(cls, data: dict[str, Any], guard: bool | None = None) -> "SuiteConfig":
        """Build a suite; ``guard=False`` disables the volume guard on every experiment."""
        data = dict(data)
        if "seed" not in data:
            raise ConfigError("suite file must set seed")
        known = {"format_version", "seed", "workers", "output", "regions", "defaults", "experiment"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        seed = int(data["seed"])
        regions = {str(k): dict(v) for k, v in data.get("regions", {}).items()}
        defaults = {"seed": seed, **data.get("defaults", {})}
        plans = []
        for i, raw in enumerate(data.get("experiment", [])):
            raw = {**defaults, **raw}
            raw.setdefault("label", f"{raw.get('type', 'experiment')}-{i}")
            if isinstance(raw.get("region"), str):
                name = raw["region"]
                if name not in regions:
                    raise ConfigError(f"experiment {raw['label']!r} names unknown region {name!r}")
                raw["region"] = dict(regions[name])
            if guard is False:
                raw["guard"] = False
            try:
                plans.append(ExperimentPlan.from_dict(raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"experiment {raw['label']!r}: {exc}") from exc
        return cls(seed=seed, experiments=plans, workers=int(data.get("workers", 1)),
                   output={str(k): str(v) for k, v in data.get("output", {}).items()}, regions=regions,
                   format_version=str(data.get("format_version", FORMAT_VERSION)))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"format_version": self.format_version, "seed": self.seed, "workers": self.workers}
        if self.output:
            out["output"] = dict(self.output)
        if self.regions:
            out["regions"] = {k: dict(v) for k, v in self.regions.items()}
        out["experiment"] = [p.to_dict() for p in self.experiments]
        return out


def load_suite(path: str | os.PathLike, guard: bool | None = None) -> SuiteConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return SuiteConfig.from_dict(data, guard=guard)


def loads_suite(text: str, guard: bool | None = None) -> SuiteConfig:
    return SuiteConfig.from_dict(tomli.loads(text), guard=guard)


def dump_suite(suite: SuiteConfig) -> str:
    return tomli_w.dumps(suite.to_dict())


def output_path(path: str | os.PathLike) -> Path:
    """Relative output paths are placed under $LATPOISSON_OUTPUT_DIR when it is set."""
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p
