"""Per-run metrics extracted from a run log."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..stats import percentile_nearest_rank
from .profiles import IKKA_ARMS, IKKA_COST_MS


@dataclass(frozen=True)
class AcceptanceThresholds:
    recovery_band: float = 0.05
    recovery_hold_s: float = 0.2
    max_recovery_s: float = 0.7
    max_p95: float = 0.25


@dataclass
class RunMetrics:
    run_id: str
    group: str
    condition: str
    tracker: str
    seed: int
    p95_abs_error: float
    p95_abs_error_all: float
    p95_abs_true_error: float
    median_recovery_s: Optional[float]
    recovery_times_s: list = field(default_factory=list)
    anomalous: bool = False
    mean_effective_fps: float = 0.0
    fallback_count: int = 0
    tracked_fraction: float = 1.0
    mean_abs_tau_occluded: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunMetrics":
        return cls(**d)


def recovery_times(rows, occlusions, dt: float, th: AcceptanceThresholds = AcceptanceThresholds()) -> list:
    """Seconds from each occlusion end until |e_true| enters the band and stays for the hold time.

    A run that never settles is charged the time remaining until the end of the log.
    """
    hold = max(1, int(round(th.recovery_hold_s / dt)))
    times = [r[0] for r in rows]
    inside = [abs(r[1]) < th.recovery_band for r in rows]
    out = []
    for _, end in occlusions:
        start = next((i for i, t in enumerate(times) if t >= end - 1e-9), None)
        if start is None:
            continue
        found = None
        run = 0
        for i in range(start, len(rows)):
            run = run + 1 if inside[i] else 0
            if run >= hold:
                found = i - hold + 1
                break
        t_hit = times[found] if found is not None else times[-1] + dt
        out.append(round(t_hit - end, 9))
    return out


def compute_metrics(log, profiles, th: AcceptanceThresholds = AcceptanceThresholds(), dt: float = 0.05) -> RunMetrics:
    rows = log.rows
    if not rows:
        raise ValueError("cannot compute metrics of an empty log")
    entry = log.entry
    tracked = [abs(r[2]) for r in rows if r[11]]
    every = [abs(r[2]) for r in rows]
    p95 = percentile_nearest_rank(tracked, 95) if tracked else 1.0
    rec = recovery_times(rows, log.occlusions, dt, th)
    extra = IKKA_COST_MS if entry.tracker in IKKA_ARMS else 0.0
    mean_cost = sum(profiles[r[13]].compute_cost_ms for r in rows) / len(rows) + extra
    fallbacks = sum(1 for a, b in zip(rows, rows[1:]) if a[13] == "mosse" and b[13] == "csrt")
    occ_tau = [abs(r[10]) for r in rows if r[12]]
    return RunMetrics(
        run_id=entry.run_id,
        group=entry.group,
        condition=entry.condition,
        tracker=entry.tracker,
        seed=entry.seed,
        p95_abs_error=p95,
        p95_abs_error_all=percentile_nearest_rank(every, 95),
        p95_abs_true_error=percentile_nearest_rank([abs(r[1]) for r in rows], 95),
        median_recovery_s=statistics.median(rec) if rec else None,
        recovery_times_s=rec,
        anomalous=any(x > th.max_recovery_s for x in rec) or p95 > th.max_p95,
        mean_effective_fps=1000.0 / mean_cost,
        fallback_count=fallbacks,
        tracked_fraction=len(tracked) / len(rows),
        mean_abs_tau_occluded=sum(occ_tau) / len(occ_tau) if occ_tau else None,
    )
