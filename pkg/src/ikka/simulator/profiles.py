"""Tracker behaviour profiles and tracker-arm definitions."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

TRACKERS = (
    "hsv", "mosse", "kcf", "csrt", "hybrid", "hybrid_ikka",
    "ablation_e", "ablation_t", "ablation_m",
)
HYBRID_ARMS = ("hybrid", "hybrid_ikka", "ablation_e", "ablation_t", "ablation_m")
IKKA_ARMS = ("hybrid_ikka", "ablation_e", "ablation_t", "ablation_m")

# per-frame cost of the anomaly computation, milliseconds
IKKA_COST_MS = 1.4


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class TrackerProfile:
    """Stochastic surrogate for one tracking back-end.

    ``occlusion_drift`` is the speed (per second) at which the reported box
    wanders while the target is hidden and ``occlusion_jitter`` the standard
    deviation of the frame-to-frame instability of that box.
    ``spurious_rate`` is the rate (per second, at zero illumination) of short jumps onto background structure
    and ``spurious_scale`` their typical size.
    """

    name: str
    measurement_noise_std: float
    psr_nominal: float
    psr_decay_under_stress: float
    reacquire_lag_s: float
    compute_cost_ms: float
    occlusion_drift: float = 0.1
    occlusion_jitter: float = 0.0
    spurious_rate: float = 0.0
    spurious_scale: float = 0.25

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "name" and v < 0:
                raise ConfigurationError(f"{self.name}: {f.name} must be non-negative")
        if not 0 <= self.psr_nominal <= 1:
            raise ConfigurationError(f"{self.name}: psr_nominal must lie in [0, 1]")
        if not self.psr_decay_under_stress <= 1:
            raise ConfigurationError(f"{self.name}: psr_decay_under_stress must lie in [0, 1] per second")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_PROFILES = {
    "hsv": TrackerProfile("hsv", 0.02, 0.75, 0.3, 0.10, 35.6, occlusion_drift=0.3,
                          occlusion_jitter=0.08, spurious_rate=6.0, spurious_scale=0.4),
    "mosse": TrackerProfile("mosse", 0.006, 0.85, 0.65, 0.10, 38.5, occlusion_drift=0.1,
                            occlusion_jitter=0.06, spurious_rate=2.0, spurious_scale=0.4),
    "kcf": TrackerProfile("kcf", 0.008, 0.85, 0.45, 0.30, 45.5, occlusion_drift=0.1,
                          occlusion_jitter=0.06, spurious_rate=2.0, spurious_scale=0.4),
    "csrt": TrackerProfile("csrt", 0.006, 0.90, 0.15, 0.45, 55.6, occlusion_drift=0.05,
                           occlusion_jitter=0.03, spurious_rate=1.0, spurious_scale=0.4),
}


def profiles_from_dict(raw: dict) -> dict:
    out = dict(DEFAULT_PROFILES)
    for name, values in raw.items():
        base = out.get(name)
        out[name] = replace(base, **values) if base else TrackerProfile(name=name, **values)
    return out


def base_tracker(arm: str) -> str:
    """Tracker profile used at the start of a run for the given arm."""
    if arm not in TRACKERS:
        raise ConfigurationError(f"unknown tracker {arm!r}")
    return "mosse" if arm in HYBRID_ARMS else arm
