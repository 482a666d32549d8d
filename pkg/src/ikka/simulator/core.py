"""Closed-loop simulation of the lateral-error servo with stochastic trackers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..anomaly import (
    AnomalyCoefficients,
    ProbabilityField,
    csi_variance,
    damping_weight,
    extremality,
    saturate as saturate_m,
    sigmoid,
    transversality,
)
from ..control import ControllerConfig, yaw_command
from ..topology import diagram_h1, total_persistence
from .manifest import ScenarioManifest
from .profiles import (
    DEFAULT_PROFILES,
    HYBRID_ARMS,
    IKKA_ARMS,
    ConfigurationError,
    TrackerProfile,
    base_tracker,
)

LOSS_PSR = 0.2
REACQUIRE_PSR = 0.3
PSR_RECOVERY_RATE = 2.0
PSR_NOISE_STD = 0.02
DIM_LEVEL = 0.3
DIM_MIN_S, DIM_MAX_S = 2.0, 4.0
DRIFT_PSR = 0.4
MAX_PEAK_FLATTENING = 4.0
# largest transversality three posterior gradients in the plane can reach
T_MAX_PLANAR = 0.125

LOG_COLUMNS = (
    "t", "e_true", "e_meas", "psr", "csi", "E", "T", "M", "W", "w", "tau",
    "tracked", "occluded", "active_tracker",
)


@dataclass(frozen=True)
class SimParams:
    """Knobs of the simulation that are not controller or anomaly coefficients.

    ``w_gain`` weights the full anomaly product E*T*M inside the damping
    exponent of the full arm; ``ablation_gain`` is the exponent weight given
    to the single component used by an ablation arm.
    """

    window: int = 30
    m_max_radius: float = 0.3
    m_half_saturation: float = 0.1
    w_gain: float = 300.0
    ablation_gain: float = 6.0
    fallback_psr: float = 0.35
    recovery_psr: float = 0.6
    recovery_frames: int = 10
    ikka_fallback_w: float = 0.5
    velocity_std: float = 0.02
    velocity_max: float = 0.02
    csi_enabled: bool = False
    csi_noise_std: float = 0.05
    field_softness_e: float = 0.3
    field_softness_psr: float = 0.15
    lost_tau_decay: float = 0.9


@dataclass
class PlantState:
    e_true: float = 0.0
    target_velocity: float = 0.0
    occluded: bool = False
    illumination: float = 1.0


def plant_step(state: PlantState, tau: float, dt: float, disturbance: float = 0.0,
               velocity_increment: float = 0.0, velocity_max: float = math.inf) -> PlantState:
    """Euler step of the lateral error; the target velocity takes one bounded random-walk step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = state.e_true + dt * (state.target_velocity - tau) + disturbance
    v = state.target_velocity + velocity_increment
    v = max(-velocity_max, min(velocity_max, v))
    return replace(state, e_true=max(-1.0, min(1.0, e)), target_velocity=v)


@dataclass
class TrackerMemory:
    """Per-run tracker state carried between frames."""

    psr: float
    tracked: bool = True
    last_meas: float = 0.0
    drift: Optional[float] = None
    hold: float = 0.0
    spurious_left: int = 0
    spurious_value: float = 0.0
    reacquire_timer: float = 0.0


@dataclass(frozen=True)
class FrameDraws:
    """Random numbers consumed by one frame of the observation model."""

    noise: float = 0.0
    psr_noise: float = 0.0
    u_sign: float = 0.5
    u_size: float = 0.5
    u_event: float = 1.0
    jitter: float = 0.0


def relax_psr(psr: float, profile: TrackerProfile, state: PlantState, dt: float) -> float:
    """One step of PSR dynamics: linear decay toward 0 under stress, recovery otherwise."""
    if state.occluded or state.illumination < 0.5:
        return max(0.0, psr - profile.psr_decay_under_stress * dt)
    if psr < profile.psr_nominal:
        return min(profile.psr_nominal, psr + PSR_RECOVERY_RATE * dt)
    return profile.psr_nominal


def observe(state: PlantState, profile: TrackerProfile, draws: FrameDraws, memory: TrackerMemory,
            dt: float = 0.05):
    """Advance the tracker model by one frame and return ``(e_meas, psr, tracked)``.

    Measurement noise is scaled by 1/illumination. PSR decays toward 0 at the
    profile rate while the target is hidden or the light is dim and recovers
    toward the nominal level otherwise. While hidden, the tracker reports its
    last box drifting at ``occlusion_drift`` per second; it is lost once PSR
    falls below 0.2 and reacquires ``reacquire_lag_s`` after the target is
    visible with PSR back above 0.3.
    """
    illum = max(state.illumination, 1e-3)
    memory.psr = relax_psr(memory.psr, profile, state, dt)
    psr_obs = min(1.0, max(0.0, memory.psr + PSR_NOISE_STD * draws.psr_noise))
    flatten = min(MAX_PEAK_FLATTENING, max(1.0, profile.psr_nominal / max(memory.psr, 1e-3)) ** 2)
    noise = profile.measurement_noise_std / illum * flatten * draws.noise

    if memory.tracked and memory.psr < LOSS_PSR:
        memory.tracked = False
        memory.reacquire_timer = 0.0
    if not memory.tracked:
        if not state.occluded and memory.psr >= REACQUIRE_PSR:
            memory.reacquire_timer += dt
            if memory.reacquire_timer >= profile.reacquire_lag_s - 1e-9:
                memory.tracked = True
        if not memory.tracked:
            memory.drift = None
            return memory.last_meas, psr_obs, False

    drifting = state.occluded or memory.psr < DRIFT_PSR
    if drifting and memory.drift is None:
        sign = 1.0 if draws.u_sign < 0.5 else -1.0
        memory.drift = sign * (0.5 + draws.u_size)
        memory.hold = memory.last_meas if state.occluded else 0.0
    elif not drifting:
        memory.drift = None
    if state.occluded:
        memory.hold += memory.drift * profile.occlusion_drift * dt
        instability = 2.0 * max(0.0, 1.0 - memory.psr / max(profile.psr_nominal, 1e-9))
        e_meas = memory.hold + noise + profile.occlusion_jitter * instability * draws.jitter
    elif drifting:
        memory.hold += memory.drift * profile.occlusion_drift * dt
        e_meas = state.e_true + memory.hold + noise
    else:
        e_meas = state.e_true + noise
    if not state.occluded:
        if memory.spurious_left > 0:
            memory.spurious_left -= 1
            e_meas += memory.spurious_value
        elif draws.u_event < profile.spurious_rate * (1.0 - illum) * dt:
            sign = 1.0 if draws.u_sign < 0.5 else -1.0
            memory.spurious_value = sign * profile.spurious_scale * (0.5 + draws.u_size)
            memory.spurious_left = int(draws.u_size * 3)
            e_meas += memory.spurious_value
    e_meas = max(-1.0, min(1.0, e_meas))
    memory.last_meas = e_meas
    return e_meas, psr_obs, True


def hybrid_step(psr: float, active: str, below_streak: int, above_streak: int, *,
                w: float = 1.0, gated: bool = False, params: SimParams = SimParams()):
    """One step of the MOSSE/CSRT switching rule.

    Returns ``(active, above_streak)``. Fallback to CSRT happens when PSR drops
    below the fallback threshold (and, when ``gated``, the damping weight is
    also below its threshold); switching back requires PSR above the recovery
    threshold for ``recovery_frames`` consecutive frames.
    """
    if active not in ("mosse", "csrt"):
        raise ConfigurationError(f"hybrid tracker cannot be {active!r}")
    if active == "mosse":
        if psr < params.fallback_psr and (not gated or w < params.ikka_fallback_w):
            return "csrt", 0
        return "mosse", 0
    above_streak = above_streak + 1 if psr > params.recovery_psr else 0
    if above_streak >= params.recovery_frames:
        return "mosse", 0
    return "csrt", above_streak


def servo_field(e: np.ndarray, psr: np.ndarray, params: SimParams = SimParams()) -> np.ndarray:
    """Posteriors of the classes left, right and lost as a softmax of linear scores.

    The three classes meet at ``e = 0`` and ``psr`` equal to the fallback
    threshold, the servo's analogue of a triple boundary junction.
    """
    e, psr = np.broadcast_arrays(np.asarray(e, float), np.asarray(psr, float))
    s = np.stack([-e / params.field_softness_e, e / params.field_softness_e,
                  (params.fallback_psr - psr) / params.field_softness_psr], axis=-1)
    s = s - s.max(axis=-1, keepdims=True)
    p = np.exp(s)
    return p / p.sum(axis=-1, keepdims=True)


def servo_transversality(e: float, psr: float, params: SimParams = SimParams(), h: float = 0.01) -> float:
    """Transversality of :func:`servo_field` at ``(e, psr)`` from a 3x3 stencil."""
    es = np.array([e - h, e, e + h])
    ps = np.array([psr - h, psr, psr + h])
    E, P = np.meshgrid(es, ps)
    field = ProbabilityField(servo_field(E, P, params), (es[0], es[-1]), (ps[0], ps[-1]))
    return transversality(field, (1, 1))


@dataclass
class RunLog:
    entry: ScenarioManifest
    rows: list = field(default_factory=list)
    occlusions: list = field(default_factory=list)
    dim_intervals: list = field(default_factory=list)


def make_schedule(entry: ScenarioManifest, rng: np.random.Generator):
    """Occlusion and dim-light intervals for a run, as lists of ``(start, end)``."""
    d = entry.duration_s
    u = rng.random(5)
    occ, dim = [], []
    if entry.condition in ("dim", "dim_occlusion"):
        start = 2.0 + u[0] * max(0.0, d - 10.0)
        dim.append((start, min(d, start + DIM_MIN_S + (DIM_MAX_S - DIM_MIN_S) * u[1])))
    if entry.condition == "occlusion":
        start = 4.0 + u[2] * max(0.0, d - 10.0)
        occ.append((start, start + 1.0 + u[3]))
    elif entry.condition == "dim_occlusion":
        start = dim[0][0] + 1.0 + 2.0 * u[4]
        occ.append((start, start + 1.0 + u[3]))
    return occ, dim


def _inside(t: float, intervals) -> bool:
    return any(a <= t < b for a, b in intervals)


def _streams(seed: int):
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1))
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def run_scenario(entry: ScenarioManifest, profiles: dict | None = None,
                 cfg: ControllerConfig = ControllerConfig(),
                 coeffs: AnomalyCoefficients = AnomalyCoefficients(),
                 params: SimParams = SimParams()) -> RunLog:
    """Simulate one manifest entry and return its per-frame log.

    All randomness comes from generators derived from ``entry.seed``, split
    into independent streams for the schedule, the target motion and the
    sensor so that different tracker arms see identical scenarios.
    """
    profiles = profiles or DEFAULT_PROFILES
    arm = entry.tracker
    active = base_tracker(arm)
    for name in ("mosse", "csrt") if arm in HYBRID_ARMS else (active,):
        if name not in profiles:
            raise ConfigurationError(f"no profile for tracker {name!r}")

    dt = cfg.period_T
    n_frames = int(round(entry.duration_s / dt))
    sched_rng, plant_rng, sensor_rng, csi_rng = _streams(entry.seed)
    occ, dim = make_schedule(entry, sched_rng)
    vel_inc = plant_rng.standard_normal(n_frames) * params.velocity_std * math.sqrt(dt)
    e0, v0 = plant_rng.uniform(-0.1, 0.1), plant_rng.uniform(-0.1, 0.1)
    gauss = sensor_rng.standard_normal((n_frames, 3))
    unif = sensor_rng.random((n_frames, 3))
    csi_noise = csi_rng.standard_normal(n_frames) * params.csi_noise_std

    plant = PlantState(e_true=e0, target_velocity=v0)
    members = ("mosse", "csrt") if arm in HYBRID_ARMS else (active,)
    psrs = {name: profiles[name].psr_nominal for name in members}
    memory = TrackerMemory(psr=profiles[active].psr_nominal, last_meas=e0)
    log = RunLog(entry=entry, occlusions=occ, dim_intervals=dim)
    ts, errs, csis, signed = [], [], [], []
    above = 0
    tau = 0.0
    gated = arm == "hybrid_ikka"
    for n in range(n_frames):
        t = n * dt
        plant.occluded = _inside(t, occ)
        plant.illumination = DIM_LEVEL if _inside(t, dim) else 1.0
        draws = FrameDraws(gauss[n, 0], gauss[n, 1], unif[n, 0], unif[n, 1], unif[n, 2], gauss[n, 2])
        memory.psr = psrs[active]
        e_meas, psr, tracked = observe(plant, profiles[active], draws, memory, dt)
        for name in members:
            psrs[name] = memory.psr if name == active else relax_psr(psrs[name], profiles[name], plant, dt)
        csi = plant.illumination + csi_noise[n] if params.csi_enabled else 0.0

        ts.append(t)
        errs.append(abs(e_meas))
        csis.append(csi)
        ts, errs, csis = ts[-params.window:], errs[-params.window:], csis[-params.window:]

        E = extremality(errs) if len(errs) >= 5 else 0.0
        signed.append(e_meas)
        signed = signed[-params.window:]
        T = servo_transversality(float(np.median(signed)), psr, params)
        if len(errs) >= 3:
            raw = total_persistence(diagram_h1(np.column_stack([ts, errs]), params.m_max_radius))
            M = saturate_m(raw, params.m_half_saturation)
        else:
            M = 0.0
        W = E * T * M
        w = _arm_weight(arm, E, T, M, W, psr, csis, coeffs, params)

        tau = yaw_command(e_meas, w, cfg) if tracked else tau * params.lost_tau_decay
        log.rows.append((t, plant.e_true, e_meas, psr, csi, E, T, M, W, w, tau,
                         tracked, plant.occluded, active))

        if arm in HYBRID_ARMS:
            active, above = hybrid_step(psr, active, 0, above, w=w, gated=gated, params=params)
        plant = plant_step(plant, tau, dt, 0.0, vel_inc[n], params.velocity_max)
    return log


def _arm_weight(arm, E, T, M, W, psr, csis, coeffs, params) -> float:
    if arm not in IKKA_ARMS:
        return 1.0
    if arm == "hybrid_ikka":
        score = (coeffs.alpha * E + coeffs.beta * (1.0 - psr)
                 + coeffs.gamma * csi_variance(csis) + params.w_gain * W)
    else:
        component = {"ablation_e": E, "ablation_t": T / T_MAX_PLANAR, "ablation_m": M}[arm]
        score = params.ablation_gain * component
    return damping_weight(score, coeffs)
