"""Aggregate tables and the statistics report over a set of run metrics."""

from __future__ import annotations

import csv
import io
import itertools
import statistics

from .. import stats
from .manifest import STRESS_CONDITIONS
from .profiles import TRACKERS

ABLATION_ARMS = ("hybrid", "ablation_e", "ablation_t", "ablation_m", "hybrid_ikka")


def _median(xs):
    return statistics.median(xs) if xs else None


def _arms(metrics) -> list:
    present = {m.tracker for m in metrics}
    return [t for t in TRACKERS if t in present]


def _stress(metrics, arm) -> list:
    return [m.p95_abs_error for m in metrics if m.tracker == arm and m.condition in STRESS_CONDITIONS]


def table_trackers(metrics) -> list:
    """Per-arm nominal and stress P95, modeled FPS, fallbacks and anomalous counts."""
    out = []
    for arm in _arms(metrics):
        ms = [m for m in metrics if m.tracker == arm]
        nominal = [m.p95_abs_error for m in ms if m.condition == "nominal"]
        stress = _stress(metrics, arm)
        out.append({
            "tracker": arm,
            "runs": len(ms),
            "p95_nominal_median": _median(nominal),
            "p95_stress_median": _median(stress),
            "fps_mean": statistics.fmean(m.mean_effective_fps for m in ms),
            "fallbacks_mean": statistics.fmean(m.fallback_count for m in ms),
            "anomalous": sum(m.anomalous for m in ms),
        })
    return out


def table_recovery(metrics, limit: float = 0.7) -> list:
    """Per-arm recovery medians and IQR over runs that contain an occlusion."""
    out = []
    for arm in _arms(metrics):
        ms = [m for m in metrics if m.tracker == arm and m.recovery_times_s]
        if not ms:
            continue
        times = [t for m in ms for t in m.recovery_times_s]
        out.append({
            "tracker": arm,
            "runs": len(ms),
            "recovery_median_s": statistics.median(times),
            "recovery_iqr_s": stats.iqr(times),
            "runs_all_below_limit": sum(all(t < limit for t in m.recovery_times_s) for m in ms),
        })
    return out


def table_ablation(metrics) -> list:
    """Stress P95 of the ablation arms next to the baseline hybrid and the full weight."""
    base = _median(_stress(metrics, "hybrid"))
    out = []
    for arm in ABLATION_ARMS:
        xs = _stress(metrics, arm)
        if not xs:
            continue
        med = _median(xs)
        out.append({
            "tracker": arm,
            "runs": len(xs),
            "p95_stress_median": med,
            "reduction_vs_hybrid": (1.0 - med / base) if base else None,
        })
    return out


def _matched(metrics, a, b) -> tuple:
    key = lambda m: (m.seed, m.condition, m.group)
    xa = {key(m): m.p95_abs_error for m in metrics if m.tracker == a and m.condition in STRESS_CONDITIONS}
    xb = {key(m): m.p95_abs_error for m in metrics if m.tracker == b and m.condition in STRESS_CONDITIONS}
    common = sorted(set(xa) & set(xb))
    return [xa[k] for k in common], [xb[k] for k in common]


def statistics_report(metrics) -> dict:
    """Omnibus and pairwise tests on stress P95 across arms.

    Pairwise p-values come from the two-group rank test and are Holm
    corrected across all pairs; Cliff's delta is positive when the first arm
    of a pair has the larger errors.
    """
    arms = [a for a in _arms(metrics) if _stress(metrics, a)]
    report = {"arms": arms, "kruskal_wallis": None, "pairwise": [], "spearman_fps_vs_stress": None,
              "wilcoxon_hybrid_vs_ikka": None}
    groups = [_stress(metrics, a) for a in arms]
    if len(arms) >= 2:
        kw = stats.kruskal_wallis(groups)
        report["kruskal_wallis"] = {"H": kw.statistic, "df": kw.df, "p": kw.p_value}
        pairs = list(itertools.combinations(range(len(arms)), 2))
        raw = [stats.kruskal_wallis([groups[i], groups[j]]).p_value for i, j in pairs]
        adjusted = stats.holm_bonferroni(raw)
        for (i, j), p, q in zip(pairs, raw, adjusted):
            delta = stats.cliffs_delta(groups[i], groups[j])
            report["pairwise"].append({
                "a": arms[i], "b": arms[j], "p": p, "p_holm": q,
                "cliffs_delta": delta, "magnitude": stats.effect_magnitude(delta),
            })
    stressed = [m for m in metrics if m.condition in STRESS_CONDITIONS]
    try:
        rho = stats.spearman([m.mean_effective_fps for m in stressed], [m.p95_abs_error for m in stressed])
        report["spearman_fps_vs_stress"] = {"rho": rho.statistic, "p": rho.p_value, "n": len(stressed)}
    except stats.StatsError:
        pass
    xa, xb = _matched(metrics, "hybrid", "hybrid_ikka")
    try:
        wx = stats.wilcoxon_signed_rank(xa, xb)
        report["wilcoxon_hybrid_vs_ikka"] = {"W": wx.statistic, "p": wx.p_value, "n": wx.n}
    except stats.StatsError:
        pass
    return report


def format_table(rows: list) -> str:
    """CSV rendering; floats with six decimals and absent values as empty cells."""
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rows[0].keys())
    for r in rows:
        w.writerow(["" if v is None else f"{v:.6f}" if isinstance(v, float) else v for v in r.values()])
    return buf.getvalue()


def render_text(rows: list) -> str:
    """Fixed-width plain-text rendering for terminals."""
    if not rows:
        return "(no rows)\n"
    cells = [[str(k) for k in rows[0]]]
    for r in rows:
        cells.append(["-" if v is None else f"{v:.3f}" if isinstance(v, float) else str(v) for v in r.values()])
    widths = [max(len(c[i]) for c in cells) for i in range(len(cells[0]))]
    return "".join("  ".join(c.ljust(wd) for c, wd in zip(line, widths)).rstrip() + "\n" for line in cells)
