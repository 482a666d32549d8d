"""Batch execution of manifests and the structured simulation configuration."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..anomaly import AnomalyCoefficients
from ..control import ControllerConfig
from .core import RunLog, SimParams, run_scenario
from .manifest import ScenarioManifest
from .metrics import AcceptanceThresholds, RunMetrics, compute_metrics
from .profiles import DEFAULT_PROFILES, ConfigurationError, profiles_from_dict

CONFIG_SECTIONS = ("controller", "coefficients", "params", "thresholds", "profiles")


def _build(cls, values: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"{section}: unknown keys {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{section}: {exc}") from None


@dataclass(frozen=True)
class SimConfig:
    """Everything besides the manifest that determines a run."""

    controller: ControllerConfig = ControllerConfig()
    coefficients: AnomalyCoefficients = AnomalyCoefficients()
    params: SimParams = SimParams()
    thresholds: AcceptanceThresholds = AcceptanceThresholds()
    profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("configuration must be a JSON object")
        extra = set(raw) - set(CONFIG_SECTIONS)
        if extra:
            raise ConfigurationError(f"unknown configuration sections {sorted(extra)}")
        try:
            profiles = profiles_from_dict(raw.get("profiles", {}))
        except TypeError as exc:
            raise ConfigurationError(f"profiles: {exc}") from None
        return cls(
            controller=_build(ControllerConfig, raw.get("controller", {}), "controller"),
            coefficients=_build(AnomalyCoefficients, raw.get("coefficients", {}), "coefficients"),
            params=_build(SimParams, raw.get("params", {}), "params"),
            thresholds=_build(AcceptanceThresholds, raw.get("thresholds", {}), "thresholds"),
            profiles=profiles,
        )

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "controller": asdict(self.controller),
            "coefficients": asdict(self.coefficients),
            "params": asdict(self.params),
            "thresholds": asdict(self.thresholds),
            "profiles": {k: v.to_dict() for k, v in sorted(self.profiles.items())},
        }


@dataclass
class BatchResult:
    entry: ScenarioManifest
    log: Optional[RunLog] = None
    metrics: Optional[RunMetrics] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_one(entry: ScenarioManifest, config: SimConfig = SimConfig()) -> BatchResult:
    """Simulate one entry; failures are captured in the result instead of raised."""
    try:
        log = run_scenario(entry, config.profiles, config.controller, config.coefficients, config.params)
        metrics = compute_metrics(log, config.profiles, config.thresholds, config.controller.period_T)
        return BatchResult(entry, log, metrics)
    except Exception as exc:  # one bad run must not stop the batch
        return BatchResult(entry, error=f"{type(exc).__name__}: {exc}")


def run_batch(manifest, config: SimConfig = SimConfig(), workers: int = 1) -> list:
    """Run every manifest entry and return results in manifest order.

    Runs share no state, so the output does not depend on ``workers`` or on
    the order of the manifest beyond the order of the returned list.
    """
    manifest = list(manifest)
    if workers <= 1 or len(manifest) < 2:
        return [run_one(e, config) for e in manifest]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_one, manifest, [config] * len(manifest), chunksize=4))


def apply_seed_override(manifest, seed: Optional[int]) -> list:
    """Replace every run's seed by ``seed + index`` for quick smoke runs."""
    if seed is None:
        return list(manifest)
    return [replace(e, seed=(int(seed) + i) % 2 ** 64) for i, e in enumerate(manifest)]
