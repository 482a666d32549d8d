"""Three-class planar counterexample: RBF SVM support vectors versus the IKKA maverick."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .anomaly import ProbabilityField, saturate, transversality_grid
from .topology import betti1_at_scale, chebyshev_matrix, diagram_h1, total_persistence

SECTOR_CENTERS_DEG = (90.0, 210.0, 330.0)
SECTOR_HALF_WIDTH_DEG = 60.0
MAX_RADIUS = 2.0  # planar density proportional to r on this disc gives mean radius 1.5
KKT_TOL = 1e-3
MAX_ITER = 100_000
KNN_K = 10
LOCAL_RADIUS = 0.75
M_HALF_SATURATION = 0.1


class PreconditionError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (max KKT violation {residual:.3g})")
        self.residual = residual


class InsufficientLocalityError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset2D:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        lab = np.asarray(self.labels, dtype=int)
        if len(pts) != len(lab):
            raise PreconditionError("points and labels differ in length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)


@dataclass(frozen=True)
class GridSpec:
    """Square grid of sample points including both ends of each range."""

    x_range: tuple = (-3.0, 3.0)
    y_range: tuple = (-3.0, 3.0)
    resolution: int = 128

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.resolution)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.resolution)

    def centers(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])


def generate_three_class(n_per_class: int = 60, seed: int = 0) -> LabeledDataset2D:
    """Three 120-degree sectors around the origin with planar density proportional to radius.

    Angles and radii are stratified within each class so that the class
    layout stays symmetric about the origin even for small samples.
    """
    if n_per_class < 30:
        raise PreconditionError("n_per_class must be at least 30")
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for cls, center in enumerate(SECTOR_CENTERS_DEG):
        strata = (np.arange(n_per_class) + rng.random(n_per_class)) / n_per_class
        angle = np.deg2rad(center + SECTOR_HALF_WIDTH_DEG * (2.0 * strata - 1.0))
        u = (rng.permutation(n_per_class) + rng.random(n_per_class)) / n_per_class
        radius = MAX_RADIUS * np.cbrt(u)
        pts.append(np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]))
        labels.append(np.full(n_per_class, cls))
    return LabeledDataset2D(np.vstack(pts), np.concatenate(labels))


def rbf_kernel(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * bandwidth ** 2))


def median_bandwidth(points: np.ndarray) -> float:
    """Median pairwise Euclidean distance."""
    pts = np.asarray(points, float)
    i, j = np.triu_indices(len(pts), 1)
    return float(np.median(np.linalg.norm(pts[i] - pts[j], axis=1)))


@dataclass
class BinarySvm:
    """Dual solution of one class pair; ``y = +1`` marks the first class."""

    classes: tuple
    indices: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    bias: float
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    kkt_residual: float = 0.0


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    """``sum(alpha) - 0.5 * alpha' Q alpha`` with ``Q = yy' * K``."""
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def smo_binary(K: np.ndarray, y: np.ndarray, box_c: float, tol: float = KKT_TOL,
               max_iter: int = MAX_ITER) -> tuple:
    """Solve the SVM dual by SMO with second-order working-set selection.

    Returns ``(alpha, bias, objective_trace, iterations, residual)``. The
    trace holds the dual objective after every update. Ties in pair
    selection go to the lowest index, so the result is deterministic.
    """
    n = len(y)
    y = np.asarray(y, dtype=float)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    trace = [0.0]
    diag = np.diag(K)
    residual = np.inf
    it = 0
    while it < max_iter:
        up = ((y > 0) & (alpha < box_c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < box_c))
        score = -y * grad
        if not up.any() or not low.any():
            residual = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m_up = score[i]
        m_low = score[low].min()
        residual = m_up - m_low
        if residual < tol:
            break
        cand = np.flatnonzero(low & (score < m_up))
        b = m_up - score[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 1e-12, a, 1e-12)
        j = int(cand[np.argmin(-(b * b) / a)])
        # move along y_i e_i - y_j e_j, keeping y'alpha fixed
        quad = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        step = (m_up - score[j]) / quad
        lim_i = box_c - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else box_c - alpha[j]
        step = min(step, lim_i, lim_j)
        di, dj = y[i] * step, -y[j] * step
        alpha[i] = min(box_c, max(0.0, alpha[i] + di))
        alpha[j] = min(box_c, max(0.0, alpha[j] + dj))
        grad += Q[:, i] * di + Q[:, j] * dj
        trace.append(dual_objective(alpha, y, K))
        it += 1
    else:
        raise SolverError(f"SMO did not converge in {max_iter} iterations", residual)
    free = (alpha > 1e-9) & (alpha < box_c - 1e-9)
    score = -y * grad
    if free.any():
        bias = float(score[free].mean())
    else:
        up = ((y > 0) & (alpha < box_c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < box_c))
        hi = score[up].max() if up.any() else 0.0
        lo = score[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias, trace, it, float(residual)


@dataclass
class SvmModel:
    points: np.ndarray
    labels: np.ndarray
    bandwidth: float
    box_c: float
    pairs: list

    @property
    def support_indices(self) -> np.ndarray:
        idx = set()
        for p in self.pairs:
            idx.update(p.indices[p.alpha > 1e-9].tolist())
        return np.array(sorted(idx), dtype=int)

    @property
    def support_vectors(self) -> np.ndarray:
        return self.points[self.support_indices]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def pair_decisions(self, x: np.ndarray) -> np.ndarray:
        """Decision value of every class pair at each row of ``x``; positive favours the first class."""
        x = np.asarray(x, float).reshape(-1, 2)
        out = np.empty((len(x), len(self.pairs)))
        for k, p in enumerate(self.pairs):
            live = p.alpha > 1e-12
            sv = self.points[p.indices[live]]
            coef = (p.alpha * p.y)[live]
            out[:, k] = rbf_kernel(x, sv, self.bandwidth) @ coef + p.bias
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        d = self.pair_decisions(x)
        votes = np.zeros((len(d), len(self.classes)), dtype=int)
        pos = {c: i for i, c in enumerate(self.classes)}
        for k, p in enumerate(self.pairs):
            a, b = pos[p.classes[0]], pos[p.classes[1]]
            votes[:, a] += d[:, k] > 0
            votes[:, b] += d[:, k] <= 0
        return self.classes[np.argmax(votes, axis=1)]


def train_rbf_svm(data: LabeledDataset2D, box_c: float = 1.0, bandwidth: Optional[float] = None,
                  tol: float = KKT_TOL, max_iter: int = MAX_ITER) -> SvmModel:
    """One-vs-one RBF SVM; ``bandwidth`` defaults to the median pairwise distance."""
    if box_c <= 0:
        raise PreconditionError("box_c must be positive")
    if bandwidth is None:
        bandwidth = median_bandwidth(data.points)
    if bandwidth <= 0:
        raise PreconditionError("bandwidth must be positive")
    classes = data.classes
    if len(classes) < 2:
        raise PreconditionError("need at least two classes")
    pairs = []
    for a, b in itertools.combinations(classes.tolist(), 2):
        idx = np.flatnonzero((data.labels == a) | (data.labels == b))
        y = np.where(data.labels[idx] == a, 1.0, -1.0)
        K = rbf_kernel(data.points[idx], data.points[idx], bandwidth)
        alpha, bias, trace, it, res = smo_binary(K, y, box_c, tol, max_iter)
        pairs.append(BinarySvm((a, b), idx, y, alpha, bias, trace, it, res))
    return SvmModel(data.points, data.labels, float(bandwidth), float(box_c), pairs)


def posterior_field(model: SvmModel, grid: GridSpec = GridSpec()) -> ProbabilityField:
    """Softmax over classes of the summed margins each class wins in its pairwise contests."""
    d = model.pair_decisions(grid.centers())
    classes = model.classes.tolist()
    scores = np.zeros((len(d), len(classes)))
    for k, p in enumerate(model.pairs):
        a, b = classes.index(p.classes[0]), classes.index(p.classes[1])
        scores[:, a] += np.maximum(d[:, k], 0.0)
        scores[:, b] += np.maximum(-d[:, k], 0.0)
    scores -= scores.max(axis=1, keepdims=True)
    p = np.exp(scores)
    p /= p.sum(axis=1, keepdims=True)
    n = grid.resolution
    return ProbabilityField(p.reshape(n, n, len(classes)), tuple(grid.x_range), tuple(grid.y_range))


def knn_distance(queries: np.ndarray, points: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    d = np.linalg.norm(np.asarray(queries)[:, None, :] - np.asarray(points)[None, :, :], axis=2)
    d.sort(axis=1)
    return d[:, k if exclude_self else k - 1]


def extremality_grid(data: LabeledDataset2D, centers: np.ndarray, k: int = KNN_K) -> np.ndarray:
    """Fraction of data points whose own k-NN distance is below the query's k-NN distance."""
    ref = np.sort(knn_distance(data.points, data.points, k, exclude_self=True))
    q = knn_distance(centers, data.points, k)
    return np.searchsorted(ref, q, side="left") / len(ref)


def local_persistence(points: np.ndarray, max_radius: float) -> float:
    """Raw total H1 persistence of a point set under the Chebyshev metric."""
    if len(points) < 3:
        return 0.0
    return total_persistence(diagram_h1(points, max_radius))


def persistence_grid(data: LabeledDataset2D, centers: np.ndarray, radius: float = LOCAL_RADIUS,
                     half_saturation: float = M_HALF_SATURATION) -> np.ndarray:
    """Saturated local persistence of the data inside a disc around every center.

    Neighbouring cells often see the same subset, so diagrams are cached by subset.
    """
    d = np.linalg.norm(centers[:, None, :] - data.points[None, :, :], axis=2)
    cache = {}
    out = np.zeros(len(centers))
    for c in range(len(centers)):
        key = tuple(np.flatnonzero(d[c] <= radius))
        if key not in cache:
            cache[key] = saturate(local_persistence(data.points[list(key)], radius), half_saturation)
        out[c] = cache[key]
    return out


@dataclass
class IkkaGrid:
    W: np.ndarray
    E: np.ndarray
    T: np.ndarray
    M: np.ndarray
    maverick: np.ndarray
    top5: np.ndarray
    grid: GridSpec
    degenerate_cells: int


def _top_separated(W: np.ndarray, count: int) -> list:
    order = np.argsort(-W, axis=None, kind="stable")
    chosen = []
    for flat in order:
        r, c = np.unravel_index(flat, W.shape)
        if all(max(abs(r - r0), abs(c - c0)) > 1 for r0, c0 in chosen):
            chosen.append((int(r), int(c)))
            if len(chosen) == count:
                break
    return chosen


def ikka_grid(data: LabeledDataset2D, field: ProbabilityField, grid: GridSpec = GridSpec(),
              radius: float = LOCAL_RADIUS, k: int = KNN_K) -> IkkaGrid:
    """W = E * T * M on every grid point; the maverick is the argmax.

    Cells where every posterior gradient vanishes lie away from any boundary
    and get ``T = 0``; they are counted in ``degenerate_cells``.
    """
    if grid.resolution < 64:
        raise PreconditionError("grid resolution must be at least 64 per axis")
    n = grid.resolution
    if field.grid.shape[:2] != (n, n):
        raise PreconditionError("field and grid resolutions differ")
    centers = grid.centers()
    E = extremality_grid(data, centers, k).reshape(n, n)
    T, degenerate = transversality_grid(field)
    n_pairs = field.grid.shape[2] * (field.grid.shape[2] - 1) // 2
    flat = degenerate == n_pairs
    T = np.where(flat, 0.0, T)
    M = persistence_grid(data, centers, radius).reshape(n, n)
    W = E * T * M
    cells = _top_separated(W, 5)
    xs, ys = grid.xs, grid.ys
    pts = np.array([(xs[c], ys[r]) for r, c in cells])
    return IkkaGrid(W, E, T, M, pts[0], pts, grid, int(flat.sum()))


def indispensability_check(data: LabeledDataset2D, point, radius: float = LOCAL_RADIUS,
                           n_remove: int = 3, scale: Optional[float] = None) -> tuple:
    """Local first Betti number around ``point`` before and after removing its nearest points.

    Both counts are read at ``scale``, by default the median pairwise
    Chebyshev distance of the local points before removal.
    """
    point = np.asarray(point, float)
    d = np.linalg.norm(data.points - point, axis=1)
    local = np.flatnonzero(d <= radius)
    if len(local) < 5:
        raise InsufficientLocalityError(f"only {len(local)} points within {radius} of {point.tolist()}")
    pts = data.points[local]
    D = chebyshev_matrix(pts)
    if scale is None:
        scale = float(np.median(D[np.triu_indices(len(pts), 1)]))
    cap = float(D.max()) + 1.0
    before = betti1_at_scale(diagram_h1(pts, cap), scale)
    keep = np.argsort(d[local], kind="stable")[n_remove:]
    after = betti1_at_scale(diagram_h1(pts[keep], cap), scale) if len(keep) >= 3 else 0
    return before, after


def support_vector_mean_distance(model: SvmModel) -> float:
    return float(np.linalg.norm(model.support_vectors, axis=1).mean())


def run_counterexample(n_per_class: int = 60, seed: int = 0, box_c: float = 1.0,
                       bandwidth: Optional[float] = None, grid: GridSpec = GridSpec()) -> dict:
    """Full pipeline; returns the artefacts and a JSON-ready summary."""
    data = generate_three_class(n_per_class, seed)
    model = train_rbf_svm(data, box_c, bandwidth)
    field = posterior_field(model, grid)
    result = ikka_grid(data, field, grid)
    try:
        beta = indispensability_check(data, result.maverick)
    except InsufficientLocalityError:
        beta = None
    summary = {
        "seed": int(seed),
        "n_per_class": int(n_per_class),
        "box_c": float(box_c),
        "bandwidth": model.bandwidth,
        "n_support_vectors": int(len(model.support_indices)),
        "sv_mean_distance": support_vector_mean_distance(model),
        "maverick": [float(v) for v in result.maverick],
        "maverick_distance": float(np.linalg.norm(result.maverick)),
        "maverick_W": float(result.W.max()),
        "top5": [[float(a), float(b)] for a, b in result.top5],
        "beta1_before": None if beta is None else int(beta[0]),
        "beta1_after": None if beta is None else int(beta[1]),
        "training_accuracy": float(np.mean(model.predict(data.points) == data.labels)),
        "kkt_residuals": [p.kkt_residual for p in model.pairs],
        "degenerate_cells": result.degenerate_cells,
    }
    return {"data": data, "model": model, "field": field, "grid": result, "summary": summary}
