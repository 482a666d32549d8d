"""Acceptance criteria, each at its stated tolerance, with one summary line apiece."""

import time

import numpy as np

from ikka import stats
from ikka.cli import main
from ikka.control import ControllerConfig, stability_check, yaw_command
from ikka.counterexample import rbf_kernel, run_counterexample, smo_binary, train_rbf_svm, generate_three_class
from ikka.topology import bottleneck_distance, diagram_h1
from oracles import (
    brute_force_pd,
    cliffs_brute,
    kruskal_h,
    projected_gradient_qp,
    spearman_brute,
    wilcoxon_enum,
)
from test_cli import same_tree

PAPER_CONTROL = ControllerConfig(gain_k=2.5, deadzone_delta=0.02, omega_max=1.2, period_T=0.05)


def test_criterion_01_persistence_oracle(acceptance):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(3, 13))
        pts = np.round(rng.uniform(0, 1, (n, 2)), 3)
        radius = float(rng.uniform(0.2, 1.2))
        got = sorted(diagram_h1(pts, radius).pairs)
        want = brute_force_pd([tuple(p) for p in pts], radius)
        mismatches += got != want
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30
    acceptance(1, ok, f"{mismatches} mismatches in 200 clouds, {elapsed:.1f}s")
    assert ok


def test_criterion_02_bottleneck_stability(acceptance):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    violations = 0
    for trial in range(100):
        eps = (0.01, 0.05, 0.1)[trial % 3]
        n = int(rng.integers(5, 61))
        pts = rng.uniform(0, 1, (n, 2))
        moved = pts + rng.uniform(-eps, eps, pts.shape)
        d = bottleneck_distance(diagram_h1(pts, 2.0), diagram_h1(moved, 2.0))
        worst = max(worst, d / eps)
        violations += d > eps + 1e-9
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120
    acceptance(2, ok, f"{violations}/100 trials exceed eps, worst d_B/eps = {worst:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_control_law(acceptance):
    rng = np.random.default_rng(303)
    e = rng.uniform(-5, 5, 1_000_000)
    w = rng.uniform(1e-9, 1.0, 1_000_000)
    worst = max(abs(yaw_command(a, b, PAPER_CONTROL)) for a, b in zip(e.tolist(), w.tolist()))
    kT, stable = stability_check(PAPER_CONTROL)
    band = PAPER_CONTROL.deadzone_delta + 1e-5
    converged = True
    for e0 in np.linspace(-1, 1, 201):
        x = e0
        for _ in range(int(round(5 / PAPER_CONTROL.period_T))):
            x -= PAPER_CONTROL.period_T * yaw_command(x, 1.0, PAPER_CONTROL)
        converged &= abs(x) <= band
    ok = worst <= 1.2 and abs(kT - 0.125) < 1e-12 and stable and converged
    acceptance(3, ok, f"max |tau| = {worst:.4f}, kT = {kT:.3f}, loop converged: {bool(converged)}")
    assert ok


def test_criterion_04_statistics_oracles(acceptance):
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    bad = {"cliff": 0, "kruskal": 0, "wilcoxon": 0, "spearman": 0}
    for _ in range(200):
        a = np.round(rng.normal(size=int(rng.integers(1, 30))), 1).tolist()
        b = np.round(rng.normal(size=int(rng.integers(1, 30))), 1).tolist()
        bad["cliff"] += stats.cliffs_delta(a, b) != cliffs_brute(a, b)

        groups = [np.round(rng.normal(size=int(rng.integers(2, 9))), 1).tolist() for _ in range(int(rng.integers(2, 5)))]
        if len(set(v for g in groups for v in g)) > 1:
            bad["kruskal"] += abs(stats.kruskal_wallis(groups).statistic - kruskal_h(groups)) > 1e-12

        n = int(rng.integers(6, 13))
        x = rng.integers(0, 6, n).astype(float).tolist()
        y = [v + float(rng.choice([-2, -1, 1, 2, 3])) for v in x]
        res = stats.wilcoxon_signed_rank(x, y)
        w_plus, p = wilcoxon_enum(x, y)
        bad["wilcoxon"] += res.statistic != w_plus or abs(res.p_value - p) > 1e-12

        m = int(rng.integers(3, 25))
        u = rng.integers(0, 8, m).astype(float).tolist()
        v = rng.integers(0, 8, m).astype(float).tolist()
        if len(set(u)) > 1 and len(set(v)) > 1:
            bad["spearman"] += abs(stats.spearman(u, v).statistic - spearman_brute(u, v)) > 1e-12
    elapsed = time.perf_counter() - start
    ok = not any(bad.values()) and elapsed < 60
    acceptance(4, ok, f"oracle mismatches {bad}, {elapsed:.1f}s")
    assert ok


def _stress_p95(batch, arm):
    return [m.p95_abs_error for m in batch[arm]]


def test_criterion_05_directional_replication(acceptance, stress_batch):
    hsv, hybrid, ikka = (_stress_p95(stress_batch, a) for a in ("hsv", "hybrid", "hybrid_ikka"))
    assert len(hybrid) == len(ikka) == 30
    med = {k: float(np.median(v)) for k, v in (("hsv", hsv), ("hybrid", hybrid), ("ikka", ikka))}
    delta = stats.cliffs_delta(hybrid, ikka)
    reduction = 1.0 - med["ikka"] / med["hybrid"]
    ordered = med["ikka"] < med["hybrid"] < med["hsv"]
    ok = ordered and delta >= 0.4 and reduction >= 0.15
    acceptance(5, ok, f"median P95 ikka {med['ikka']:.4f} < hybrid {med['hybrid']:.4f} < hsv {med['hsv']:.4f}: "
                      f"{ordered}; delta = {delta:.3f} (need >= 0.4); reduction = {reduction:.1%} (need >= 15%)")
    assert ok


def test_criterion_06_ablation_ordering(acceptance, stress_batch):
    med = {a: float(np.median(_stress_p95(stress_batch, a)))
           for a in ("hybrid", "ablation_e", "ablation_t", "ablation_m", "hybrid_ikka")}
    seeds = {a: [m.seed for m in stress_batch[a]] for a in med}
    assert all(s == seeds["hybrid"] for s in seeds.values())
    singles = ("ablation_e", "ablation_t", "ablation_m")
    full_best = all(med["hybrid_ikka"] < med[a] for a in singles)
    beat_base = {a: med[a] < med["hybrid"] for a in singles}
    ok = full_best and all(beat_base.values())
    shown = ", ".join(f"{a} {v:.4f}" for a, v in med.items())
    acceptance(6, ok, f"medians {shown}; full below each single: {full_best}; singles below baseline: {beat_base}")
    assert ok


def test_criterion_07_recovery(acceptance, occlusion_batch):
    hybrid, ikka = occlusion_batch["hybrid"][:30], occlusion_batch["hybrid_ikka"][:30]
    assert [m.seed for m in hybrid] == [m.seed for m in ikka]
    rec_h = [t for m in hybrid for t in m.recovery_times_s]
    rec_i = [t for m in ikka for t in m.recovery_times_s]
    faster = float(np.median(rec_i)) < float(np.median(rec_h))
    # each matched seed is one sweep of the occlusion scenario
    clean = sum(all(t < 0.7 for t in m.recovery_times_s) for m in ikka) / len(ikka)
    ok = faster and clean >= 0.9
    acceptance(7, ok, f"median recovery ikka {np.median(rec_i):.3f}s vs hybrid {np.median(rec_h):.3f}s; "
                      f"seeds with all recoveries < 0.7s: {clean:.0%} (need >= 90%)")
    assert ok


def test_criterion_08_counterexample_gap(acceptance):
    mav, sv = [], []
    for seed in range(20):
        s = run_counterexample(seed=seed)["summary"]
        mav.append(s["maverick_distance"])
        sv.append(s["sv_mean_distance"])
    m_med, s_med = float(np.median(mav)), float(np.median(sv))
    ok = m_med < 0.3 and s_med > 0.9
    acceptance(8, ok, f"median maverick distance {m_med:.3f} (reference 0.13), "
                      f"median SV mean distance {s_med:.3f} (reference 1.32)")
    assert ok


def test_criterion_09_smo(acceptance):
    model = train_rbf_svm(generate_three_class(60, seed=9))
    monotone = all(np.all(np.diff(p.objective_trace) >= -1e-12) for p in model.pairs)
    rng = np.random.default_rng(909)
    X = rng.normal(size=(5, 2))
    y = np.array([1.0, -1.0, 1.0, -1.0, -1.0])
    K = rbf_kernel(X, X, 1.0)
    alpha, *_ = smo_binary(K, y, 1.0, tol=1e-9)
    err = float(np.max(np.abs(alpha - projected_gradient_qp(K, y, 1.0))))
    ok = monotone and err < 1e-4
    acceptance(9, ok, f"dual objective monotone: {monotone}; n=5 max |alpha - oracle| = {err:.2e}")
    assert ok


def test_criterion_10_end_to_end_determinism(acceptance, tmp_path):
    start = time.perf_counter()
    codes = []
    for name in ("first", "second"):
        root = tmp_path / name
        codes.append(main(["simulate", "--manifest", "default", "--output", str(root / "sim")]))
        codes.append(main(["analyze", "--input", str(root / "sim"), "--output", str(root / "analysis")]))
    elapsed = time.perf_counter() - start
    logs = len(list((tmp_path / "first" / "sim" / "logs").glob("*.csv")))
    identical = same_tree(tmp_path / "first", tmp_path / "second")
    ok = identical and codes == [0, 0, 0, 0] and logs == 230 and elapsed < 600
    acceptance(10, ok, f"{logs} logs, exit codes {codes}, identical trees: {identical}, {elapsed:.0f}s")
    assert ok
