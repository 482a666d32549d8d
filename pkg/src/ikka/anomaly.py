"""Anomaly terms: extremality, transversality, persistence, and the control weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .topology import diagram_h1, total_persistence

GRAD_EPS = 1e-12


class AnomalyError(ValueError):
    pass


@dataclass(frozen=True)
class AnomalyCoefficients:
    """Weights of the per-frame damping exponent.

    ``calibration_offset`` places nominal frames near unity gain. Setting
    ``literal_sign`` evaluates the sigmoid on the raw anomaly instead, so that
    anomalies raise the weight.
    """

    alpha: float = 1.0
    beta: float = 0.8
    gamma: float = 0.3
    calibration_offset: float = 3.0
    literal_sign: bool = False

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise AnomalyError("alpha, beta and gamma must be non-negative")


@dataclass(frozen=True)
class FrameObservation:
    t: float
    e_x: float
    psr: float
    csi: float = 0.0
    tracked: bool = True


@dataclass(frozen=True)
class AnomalyWeights:
    extremality: float
    transversality: float
    persistence: float
    full_weight: float
    frame_weight: float


@dataclass(frozen=True)
class ProbabilityField:
    """Class posteriors sampled on a regular grid.

    ``grid`` has shape ``(ny, nx, K)``; row index follows y, column index x.
    """

    grid: np.ndarray
    x_range: tuple
    y_range: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 3 or g.shape[2] < 2:
            raise AnomalyError("grid must have shape (ny, nx, K) with K >= 2")
        object.__setattr__(self, "grid", g)

    @property
    def resolution(self) -> tuple:
        return self.grid.shape[1], self.grid.shape[0]

    @property
    def spacing(self) -> tuple:
        nx, ny = self.resolution
        dx = (self.x_range[1] - self.x_range[0]) / (nx - 1)
        dy = (self.y_range[1] - self.y_range[0]) / (ny - 1)
        return dx, dy

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.grid >= 0) and np.all(np.abs(self.grid.sum(axis=2) - 1) <= tol))


class Transversality(NamedTuple):
    value: float
    degenerate_pairs: int


def _abs_errors(window) -> np.ndarray:
    if len(window) and isinstance(window[0], FrameObservation):
        return np.abs(np.fromiter((o.e_x for o in window), float, len(window)))
    return np.abs(np.asarray(window, dtype=float))


def extremality(window) -> float:
    """Robust z-score of the newest ``|e_x|`` against the window, mapped into [0, 1].

    The score saturates at three median absolute deviations.
    """
    errs = _abs_errors(window)
    if len(errs) < 5:
        raise AnomalyError("extremality needs a window of at least 5 frames")
    med = np.median(errs)
    mad = np.median(np.abs(errs - med))
    return float(min(1.0, abs(errs[-1] - med) / (3.0 * mad + 1e-9)))


def transversality_from_gradients(grads) -> Transversality:
    """Product over class pairs of ``1 - |cos|`` between posterior gradients."""
    g = np.asarray(grads, dtype=float)
    norms = np.linalg.norm(g, axis=1)
    value = 1.0
    degenerate = 0
    k = len(g)
    for i in range(k):
        for j in range(i + 1, k):
            if norms[i] < GRAD_EPS or norms[j] < GRAD_EPS:
                degenerate += 1
                continue
            cos = float(g[i] @ g[j]) / (norms[i] * norms[j])
            value *= 1.0 - min(1.0, abs(cos))
    return Transversality(float(value), degenerate)


def field_gradients(field: ProbabilityField, location) -> np.ndarray:
    """Central-difference gradients of every class posterior at ``location = (row, col)``."""
    row, col = location
    ny, nx, _ = field.grid.shape
    if not (0 < row < ny - 1 and 0 < col < nx - 1):
        raise AnomalyError(f"location {location} is on the grid boundary")
    dx, dy = field.spacing
    g = field.grid
    d_dx = (g[row, col + 1] - g[row, col - 1]) / (2 * dx)
    d_dy = (g[row + 1, col] - g[row - 1, col]) / (2 * dy)
    return np.stack([d_dx, d_dy], axis=1)


def transversality(field: ProbabilityField, location, *, detail: bool = False):
    t = transversality_from_gradients(field_gradients(field, location))
    return t if detail else t.value


def transversality_grid(field: ProbabilityField) -> tuple:
    """Transversality at every interior cell; boundary cells are set to 0.

    Returns ``(values, degenerate_counts)``.
    """
    g = field.grid
    ny, nx, k = g.shape
    dx, dy = field.spacing
    gx = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * dx)
    gy = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * dy)
    norms = np.hypot(gx, gy)
    inner = np.ones((ny - 2, nx - 2))
    degenerate = np.zeros((ny - 2, nx - 2), dtype=int)
    for i in range(k):
        for j in range(i + 1, k):
            ni, nj = norms[..., i], norms[..., j]
            flat = (ni < GRAD_EPS) | (nj < GRAD_EPS)
            with np.errstate(invalid="ignore", divide="ignore"):
                cos = (gx[..., i] * gx[..., j] + gy[..., i] * gy[..., j]) / (ni * nj)
            factor = np.where(flat, 1.0, 1.0 - np.minimum(1.0, np.abs(np.nan_to_num(cos))))
            inner *= factor
            degenerate += flat
    values = np.zeros((ny, nx))
    values[1:-1, 1:-1] = inner
    counts = np.zeros((ny, nx), dtype=int)
    counts[1:-1, 1:-1] = degenerate
    return values, counts


def saturate(raw: float, half_saturation: float) -> float:
    return raw / (raw + half_saturation) if raw > 0 else 0.0


def persistence_term(window, max_radius: float, half_saturation: float = 0.1, *,
                     times: Sequence[float] | None = None) -> float:
    """Normalised total H1 persistence of the ``(t, |e_x|)`` cloud of a window."""
    if len(window) < 3:
        raise AnomalyError("persistence term needs at least 3 frames")
    if isinstance(window[0], FrameObservation):
        pts = np.array([(o.t, abs(o.e_x)) for o in window])
    else:
        if times is None:
            raise AnomalyError("raw error windows need explicit times")
        pts = np.column_stack([np.asarray(times, float), _abs_errors(window)])
    raw = total_persistence(diagram_h1(pts, max_radius))
    return saturate(raw, half_saturation)


def full_weight(E: float, T: float, M: float) -> float:
    for name, v in (("E", E), ("T", T), ("M", M)):
        if not 0.0 <= v <= 1.0:
            raise AnomalyError(f"{name}={v} outside [0, 1]")
    return E * T * M


def csi_variance(window) -> float:
    if len(window) < 2:
        return 0.0
    return float(np.var(np.asarray(window, dtype=float)))


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def anomaly_score(E: float, psr: float, csi_window, coeffs: AnomalyCoefficients) -> float:
    return coeffs.alpha * E + coeffs.beta * (1.0 - psr) + coeffs.gamma * csi_variance(csi_window)


def damping_weight(score: float, coeffs: AnomalyCoefficients) -> float:
    if coeffs.literal_sign:
        return sigmoid(score)
    return sigmoid(coeffs.calibration_offset - score)


def frame_weight(E: float, psr: float, csi_window, coeffs: AnomalyCoefficients = AnomalyCoefficients()) -> float:
    """Per-frame control weight; larger anomalies give a smaller weight."""
    if not 0.0 <= psr <= 1.0:
        raise AnomalyError(f"psr={psr} outside [0, 1]")
    if not 0.0 <= E <= 1.0:
        raise AnomalyError(f"E={E} outside [0, 1]")
    return damping_weight(anomaly_score(E, psr, csi_window, coeffs), coeffs)
