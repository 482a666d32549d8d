"""Bounded yaw-rate law with deadzone and saturation."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ControllerConfig:
    gain_k: float = 2.5
    deadzone_delta: float = 0.02
    omega_max: float = 1.2
    period_T: float = 0.05

    def __post_init__(self):
        if not (self.gain_k > 0 and self.omega_max > 0 and self.period_T > 0):
            raise ValueError("gain_k, omega_max and period_T must be positive")
        if self.deadzone_delta < 0:
            raise ValueError("deadzone_delta must be non-negative")


def deadzone(e: float, delta: float) -> float:
    """Zero inside ``[-delta, delta]``, shifted toward zero by ``delta`` outside."""
    if abs(e) <= delta:
        return 0.0
    return e - math.copysign(delta, e)


def saturate(x: float, limit: float) -> float:
    return max(-limit, min(limit, x))


def yaw_command(e_x: float, w: float, cfg: ControllerConfig = ControllerConfig()) -> float:
    return saturate(cfg.gain_k * deadzone(e_x, cfg.deadzone_delta) * w, cfg.omega_max)


def stability_check(cfg: ControllerConfig) -> tuple:
    kT = cfg.gain_k * cfg.period_T
    return kT, 0.0 < kT < 2.0
