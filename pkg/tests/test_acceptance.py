"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured quantities.

The reproduction criteria (7 and 8) execute the bundled experiment
configuration end to end, including the Monte Carlo reference batch, and
are by far the slowest part of the whole test run.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from asseopf.analytics import validation_error
from asseopf.config import load_config
from asseopf.grid import power_mismatch, solve_ac_opf
from asseopf.grid.acopf import OpfStatus, warm_start_from
from asseopf.grid.renewables import apply_uncertainty
from asseopf.pipeline import run_experiment, sweep_experiment
from asseopf.sparse_pce import adaptive_fit, design_matrix, hyperbolic_index_set, loo_error, sobol_first_order
from asseopf.sse import SseConfig, fit_asse
from asseopf.uncertainty import sample_qmc

CASE9_OPF_OBJECTIVE = 5296.69  # external reference solver result for the fixture


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


# ---------------------------------------------------------------------------
# 1. polynomial exactness


def test_criterion_1_polynomial_exactness():
    t0 = time.perf_counter()
    idx = hyperbolic_index_set(3, 3, 1.0)
    pts = sample_qmc(200, 3, seed_skip=1).points
    x = design_matrix(pts, idx.indices)
    worst_eloo, worst_coef = 0.0, 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        coef_true = rng.standard_normal(len(idx))
        z = x @ coef_true
        model = adaptive_fit(pts, z, h_range=range(0, 4), q_range=(1.0,))
        lookup = {tuple(r): c for r, c in zip(model.indices, model.coefficients)}
        coef_err = max(
            abs(lookup.get(tuple(row), 0.0) - ct) for row, ct in zip(idx.indices, coef_true)
        )
        worst_eloo = max(worst_eloo, model.e_loo)
        worst_coef = max(worst_coef, coef_err)
    dt = time.perf_counter() - t0
    ok = worst_eloo < 1e-10 and worst_coef < 1e-8 and dt < 5.0
    assert _report(
        "criterion 1 polynomial exactness",
        ok,
        f"e_loo={worst_eloo:.3g} (<1e-10), coef_err={worst_coef:.3g} (<1e-8), {dt:.2f}s (<5s)",
    )


# ---------------------------------------------------------------------------
# 2. LOO oracle equivalence


def _brute_force_loo(x, z):
    n = x.shape[0]
    errs = np.empty(n)
    for m in range(n):
        keep = np.arange(n) != m
        coef, *_ = np.linalg.lstsq(x[keep], z[keep], rcond=None)
        errs[m] = (z[m] - x[m] @ coef) ** 2
    return errs.mean()


def test_criterion_2_loo_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        x = rng.standard_normal((20, 6))
        x[:, 0] = 1.0
        z = rng.standard_normal(20)
        coef, *_ = np.linalg.lstsq(x, z, rcond=None)
        fast = loo_error(x, z, coef)
        slow = _brute_force_loo(x, z)
        worst = max(worst, abs(fast - slow) / abs(slow))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 10.0
    assert _report(
        "criterion 2 LOO oracle equivalence",
        ok,
        f"max rel diff={worst:.3g} (<1e-8) over 50 instances, {dt:.2f}s (<10s)",
    )


# ---------------------------------------------------------------------------
# 3. Sobol' indices on the Ishigami function


def test_criterion_3_ishigami_sobol():
    t0 = time.perf_counter()
    a, b = 7.0, 0.1
    # analytic variance decomposition
    var = a**2 / 8 + b * math.pi**4 / 5 + b**2 * math.pi**8 / 18 + 0.5
    d1 = b * math.pi**4 / 5 + b**2 * math.pi**8 / 50 + 0.5
    d2 = a**2 / 8
    s_true = np.array([d1 / var, d2 / var, 0.0])

    u = sample_qmc(500, 3, seed_skip=1).points
    x = -math.pi + 2 * math.pi * u  # uniform on [-pi, pi]^3
    z = np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])
    model = adaptive_fit(u, z, h_range=range(0, 10), q_range=(1.0,))
    s = sobol_first_order(model)
    err = np.abs(s - s_true)
    dt = time.perf_counter() - t0
    ok = np.all(err < 0.02) and dt < 30.0
    assert _report(
        "criterion 3 Ishigami Sobol indices",
        ok,
        f"S={np.round(s, 4)} vs {np.round(s_true, 4)}, max err={err.max():.4f} (<0.02), {dt:.1f}s (<30s)",
    )


# ---------------------------------------------------------------------------
# 4. local-behavior advantage


def test_criterion_4_local_behavior_advantage():
    t0 = time.perf_counter()
    pts = sample_qmc(300, 2, seed_skip=1).points
    z = (pts[:, 0] > 0.7).astype(float) + 0.1 * pts[:, 1]
    cfg = SseConfig()  # identical (H, q) sweep for both methods
    asse = fit_asse(pts, z, cfg)
    spce = fit_asse(pts, z, replace(cfg, k_max=0))

    val = sample_qmc(10**4, 2, seed_skip=301).points
    truth = (val[:, 0] > 0.7).astype(float) + 0.1 * val[:, 1]
    e_asse = validation_error(truth, asse.evaluate(val))
    e_spce = validation_error(truth, spce.evaluate(val))
    dt = time.perf_counter() - t0
    ratio = e_spce / e_asse
    ok = e_asse * 10 <= e_spce and dt < 60.0
    assert _report(
        "criterion 4 local-behavior advantage",
        ok,
        f"e_val ASSE={e_asse:.3g}, SPCE={e_spce:.3g}, ratio={ratio:.1f} (>=10), {dt:.1f}s (<60s)",
    )


# ---------------------------------------------------------------------------
# 5. structural invariants over randomized fits


def test_criterion_5_structural_invariants():
    t0 = time.perf_counter()
    probes_cache = {}
    checked = 0
    for trial in range(100):
        rng = np.random.default_rng(5000 + trial)
        m = int(rng.integers(1, 4))
        n = int(rng.integers(40, 161))
        k_max = int(rng.choice([2, 4, 1000]))
        pts = sample_qmc(n, m, seed_skip=1 + 7 * trial).points
        kind = trial % 3
        if kind == 0:
            z = np.sin(3 * pts[:, 0]) + rng.standard_normal(n) * 0.05
        elif kind == 1:
            z = (pts[:, 0] > rng.uniform(0.2, 0.8)).astype(float)
        else:
            z = pts.sum(axis=1) ** 2 + rng.standard_normal(n) * 0.1
        cfg = SseConfig(n_ref_min=8, k_max=k_max, h_range=range(0, 4), q_range=(0.75, 1.0))
        tree = fit_asse(pts, z, cfg)

        if m not in probes_cache:
            probes_cache[m] = sample_qmc(2000, m, seed_skip=99991).points
        probes = probes_cache[m]
        claimed = np.zeros(len(probes), dtype=int)
        for node in tree.terminal_nodes():
            claimed += node.domain.contains(probes).astype(int)
        assert np.all(claimed == 1), f"trial {trial}: partition violated"
        for node in tree.nodes():
            if node.children is not None:
                lo, hi = node.children
                assert abs(lo.domain.mass + hi.domain.mass - node.domain.mass) <= 1e-14
                assert abs(lo.domain.mass - node.domain.mass / 2) <= 1e-14
        assert tree.depth() <= k_max
        checked += 1
    dt = time.perf_counter() - t0
    ok = checked == 100 and dt < 60.0
    assert _report(
        "criterion 5 SSE structural invariants",
        ok,
        f"{checked}/100 randomized fits clean (partition, masses, depth), {dt:.1f}s (<60s)",
    )


# ---------------------------------------------------------------------------
# 6. power flow / OPF soundness


def test_criterion_6_opf_soundness(case9):
    t0 = time.perf_counter()
    nominal = solve_ac_opf(case9, x0=warm_start_from(case9))
    assert nominal.status is OpfStatus.CONVERGED
    obj_err = abs(nominal.objective - CASE9_OPF_OBJECTIVE) / CASE9_OPF_OBJECTIVE

    from asseopf.grid.renewables import PvPlant, ResModel, WindFarm

    res = ResModel(wind=WindFarm(bus=2, capacity_mw=100.0), pv=PvPlant(bus=3, capacity_mw=100.0))
    samples = [
        (0.0, 0.0, 90.0, 100.0, 125.0),
        (10.0, 0.8, 95.0, 104.0, 120.0),
        (12.5, 1.0, 85.0, 96.0, 131.0),
    ]
    worst_mismatch, worst_violation = 0.0, -np.inf
    x0 = warm_start_from(case9, nominal)
    solved = [nominal]
    for zeta in samples:
        mod = apply_uncertainty(case9, res, zeta, (5, 7, 9))
        sol = solve_ac_opf(mod, x0=x0)
        assert sol.converged, zeta
        solved.append(sol)
        pos = mod.bus_index()
        pg_bus = np.zeros(mod.n_bus)
        qg_bus = np.zeros(mod.n_bus)
        for k, g in enumerate(mod.generators):
            pg_bus[pos[g.bus]] += sol.pg[k]
            qg_bus[pos[g.bus]] += sol.qg[k]
        mis = power_mismatch(mod, sol.vm, sol.va, pg_bus, qg_bus)
        worst_mismatch = max(worst_mismatch, float(np.abs(mis).max()))
        worst_violation = max(worst_violation, sol.max_violation)
    dt = time.perf_counter() - t0
    ok = (
        worst_mismatch < 1e-8
        and worst_violation < 1e-6
        and obj_err < 1e-3
        and dt < 10.0
    )
    assert _report(
        "criterion 6 power-flow/OPF soundness",
        ok,
        f"mismatch={worst_mismatch:.2g} (<1e-8 p.u.), violation={worst_violation:.2g} (<1e-6), "
        f"objective err={100 * obj_err:.4f}% (<0.1%), {dt:.1f}s (<10s)",
    )


# ---------------------------------------------------------------------------
# 7 and 8. paper-scale reproduction and determinism


PAPER_MEAN_COST = 2711.7
PAPER_COST_LOW = 1883.9
PAPER_COST_UP = 4110.8


@pytest.fixture(scope="module")
def repro_artifacts(tmp_path_factory, repro_config_path):
    cfg = load_config(repro_config_path)
    out = tmp_path_factory.mktemp("repro")
    t0 = time.perf_counter()
    manifest = run_experiment(cfg, out_dir=out / "run", workers=2, figures=False)
    rows = sweep_experiment(cfg, out_dir=out / "sweep", workers=2, figures=False)
    elapsed = time.perf_counter() - t0
    return {"cfg": cfg, "out": out, "manifest": manifest, "sweep_rows": rows, "elapsed": elapsed}


def _summary_row(out_dir, response, method):
    import csv

    with open(Path(out_dir) / "summary.csv") as fh:
        for row in csv.DictReader(fh):
            if row["response"] == response and row["method"] == method:
                return row
    raise KeyError((response, method))


def _rolling_median3(values):
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    for i in range(len(v)):
        lo, hi = max(0, i - 1), min(len(v), i + 2)
        out[i] = np.median(v[lo:hi])
    return out


def test_criterion_7_paper_scale_reproduction(repro_artifacts):
    man = repro_artifacts["manifest"]
    out = repro_artifacts["out"]
    elapsed = repro_artifacts["elapsed"]

    asse_cost = _summary_row(out / "run", "cost", "ASSE")
    mean = float(asse_cost["mean"])
    q05 = float(asse_cost["q0.05"])
    q95 = float(asse_cost["q0.95"])

    ok_a = abs(mean - PAPER_MEAN_COST) / PAPER_MEAN_COST < 0.05
    e_asse = man["e_val"]["ASSE"]["cost"]
    e_spce = man["e_val"]["SPCE"]["cost"]
    ok_b = e_asse <= e_spce
    ok_c = (
        q05 < mean < q95
        and abs(q05 - PAPER_COST_LOW) / PAPER_COST_LOW < 0.10
        and abs(q95 - PAPER_COST_UP) / PAPER_COST_UP < 0.10
    )
    asse_rows = sorted(
        (r["n_ed"], r["e_val"])
        for r in repro_artifacts["sweep_rows"]
        if r["method"] == "ASSE" and r["response"] == "cost"
    )
    smoothed = _rolling_median3([e for _, e in asse_rows])
    ok_d = bool(np.all(np.diff(smoothed) <= 1e-12))
    ok_t = elapsed < 900.0

    ok = ok_a and ok_b and ok_c and ok_d and ok_t
    assert _report(
        "criterion 7 paper-scale reproduction",
        ok,
        f"(a) mean={mean:.1f} vs {PAPER_MEAN_COST} ({100 * abs(mean - PAPER_MEAN_COST) / PAPER_MEAN_COST:.2f}%, <5%) "
        f"(b) e_val ASSE={e_asse:.3g} <= SPCE={e_spce:.3g}: {ok_b} "
        f"(c) bounds {q05:.1f}/{q95:.1f} vs {PAPER_COST_LOW}/{PAPER_COST_UP}: {ok_c} "
        f"(d) smoothed trend non-increasing: {ok_d} "
        f"runtime {elapsed:.0f}s (<900s)",
    )


def test_criterion_8_determinism(repro_artifacts):
    cfg = repro_artifacts["cfg"]
    out = repro_artifacts["out"]
    run_experiment(cfg, out_dir=out / "run2", workers=2, figures=False)
    sweep_experiment(cfg, out_dir=out / "sweep2", workers=2, figures=False)

    mismatched = []
    pairs = 0
    for first, second in (("run", "run2"), ("sweep", "sweep2")):
        for csv_path in sorted((out / first).rglob("*.csv")):
            other = out / second / csv_path.relative_to(out / first)
            pairs += 1
            if csv_path.read_bytes() != other.read_bytes():
                mismatched.append(str(csv_path.name))
        for doc in sorted((out / first).rglob("*.json")):
            if doc.name == "manifest.json":
                continue  # contains wall times
            other = out / second / doc.relative_to(out / first)
            pairs += 1
            if doc.read_bytes() != other.read_bytes():
                mismatched.append(str(doc.name))
    ok = not mismatched and pairs > 0
    assert _report(
        "criterion 8 determinism",
        ok,
        f"{pairs} artifacts byte-compared, mismatches: {mismatched or 'none'}",
    )
