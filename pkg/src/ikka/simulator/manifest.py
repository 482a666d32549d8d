"""Scenario manifests: the declarative description of a simulated batch."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .profiles import TRACKERS, ConfigurationError

GROUPS = ("screen_gt", "arena", "occlusion")
CONDITIONS = ("nominal", "dim", "occlusion", "dim_occlusion")
STRESS_CONDITIONS = ("dim", "occlusion", "dim_occlusion")
MANIFEST_HEADER = ("run_id", "group", "condition", "tracker", "seed", "duration_s")
PAPER_TRACKERS = ("hsv", "mosse", "kcf", "csrt", "hybrid", "hybrid_ikka")
ABLATION_TRACKERS = ("hybrid", "ablation_e", "ablation_t", "ablation_m", "hybrid_ikka")
DEFAULT_DURATION_S = 20.0


class ManifestError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class ScenarioManifest:
    run_id: str
    group: str
    condition: str
    tracker: str
    seed: int
    duration_s: float = DEFAULT_DURATION_S

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ManifestError(f"unknown group {self.group!r}")
        if self.condition not in CONDITIONS:
            raise ManifestError(f"unknown condition {self.condition!r}")
        if self.tracker not in TRACKERS:
            raise ConfigurationError(f"unknown tracker {self.tracker!r}")
        if not self.duration_s > 0:
            raise ManifestError("duration_s must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ManifestError("seed must fit in 64 unsigned bits")

    @property
    def stressed(self) -> bool:
        return self.condition in STRESS_CONDITIONS

    def to_row(self) -> list:
        return [self.run_id, self.group, self.condition, self.tracker, str(self.seed), f"{self.duration_s:g}"]


def parse_manifest(text: str):
    """Parse manifest CSV text.

    Returns ``(entries, errors)``; a malformed row is reported in ``errors`` as
    a :class:`ManifestError` naming the row and does not stop the parse.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise ManifestError(f"manifest header must be {','.join(MANIFEST_HEADER)}")
    entries, errors, seen = [], [], set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(f"expected {len(MANIFEST_HEADER)} fields, got {len(row)}")
            run_id, group, condition, tracker, seed, duration = (c.strip() for c in row)
            if run_id in seen:
                raise ManifestError(f"duplicate run_id {run_id!r}")
            try:
                seed_v, duration_v = int(seed), float(duration)
            except ValueError as exc:
                raise ManifestError(str(exc)) from None
            entry = ScenarioManifest(run_id, group, condition, tracker, seed_v, duration_v)
        except (ManifestError, ConfigurationError) as exc:
            errors.append(ManifestError(str(exc).removeprefix(f"row {lineno}: "), row=lineno))
            continue
        seen.add(run_id)
        entries.append(entry)
    return entries, errors


def read_manifest(path) -> tuple:
    return parse_manifest(Path(path).read_text())


def format_manifest(entries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for e in entries:
        w.writerow(e.to_row())
    return buf.getvalue()


def write_manifest(entries, path) -> None:
    Path(path).write_text(format_manifest(entries))


def default_manifest(base_seed: int = 2026, duration_s: float = DEFAULT_DURATION_S) -> list:
    """The 230-run batch: 50 screen-driven, 150 arena and 30 occlusion runs.

    Trackers rotate within each group. Screen-driven runs are nominal; arena
    runs alternate nominal and dim light; occlusion runs alternate plain and
    dim occlusion.
    """
    entries = []
    k = 0

    def add(group, condition, tracker):
        nonlocal k
        entries.append(ScenarioManifest(f"{group}_{k:03d}", group, condition, tracker, base_seed + k, duration_s))
        k += 1

    for i in range(50):
        add("screen_gt", "nominal", PAPER_TRACKERS[i % 6])
    for i in range(150):
        add("arena", "nominal" if (i // 6) % 2 == 0 else "dim", PAPER_TRACKERS[i % 6])
    for i in range(30):
        add("occlusion", "occlusion" if (i // 6) % 2 == 0 else "dim_occlusion", PAPER_TRACKERS[i % 6])
    return entries


def arm_manifest(trackers, condition_cycle, runs_per_arm: int, base_seed: int = 1000,
                 group: str = "occlusion", duration_s: float = DEFAULT_DURATION_S) -> list:
    """Matched-seed batch: run ``i`` of every arm shares seed and condition."""
    out = []
    for i in range(runs_per_arm):
        cond = condition_cycle[i % len(condition_cycle)]
        for tr in trackers:
            out.append(ScenarioManifest(f"{tr}_{i:03d}", group, cond, tr, base_seed + i, duration_s))
    return out


def ablation_manifest(runs_per_arm: int = 30, base_seed: int = 5000) -> list:
    return arm_manifest(ABLATION_TRACKERS, STRESS_CONDITIONS, runs_per_arm, base_seed)
