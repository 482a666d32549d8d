"""Seeded closed-loop simulation of the tracking servo."""

from .batch import BatchResult, SimConfig, apply_seed_override, run_batch, run_one
from .core import (
    LOG_COLUMNS,
    FrameDraws,
    PlantState,
    RunLog,
    SimParams,
    TrackerMemory,
    hybrid_step,
    make_schedule,
    observe,
    plant_step,
    relax_psr,
    run_scenario,
    servo_field,
    servo_transversality,
)
from .io import LogSchemaError, format_log, parse_log, read_log, read_metrics, write_log, write_metrics
from .manifest import (
    ManifestError,
    ScenarioManifest,
    ablation_manifest,
    arm_manifest,
    default_manifest,
    format_manifest,
    parse_manifest,
    read_manifest,
    write_manifest,
)
from .metrics import AcceptanceThresholds, RunMetrics, compute_metrics, recovery_times
from .profiles import DEFAULT_PROFILES, ConfigurationError, TrackerProfile
