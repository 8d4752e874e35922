"""Acceptance suite: one test per criterion, each printing a PASS line.

Criteria 7 and 8 run the full desk-scale pipeline (20x20 grid, 64 runs,
K=120) twice, so this module takes a few minutes end to end.
"""

import csv
import time
from pathlib import Path

import numpy as np
import pytest

from rootdiag.config import desk_config
from rootdiag.datasets import center_split, random_split
from rootdiag.metrics import (
    MetricWindow,
    compute_metrics,
    good_subset_threshold,
    required_iterations,
)
from rootdiag.models import ModelSpec, evaluate, fit, predict
from rootdiag.pipeline import run_pipeline
from rootdiag.profiler import (
    EmbeddingConfig,
    ProxyProfile,
    micro_series,
    profile_length,
    proxy_profile,
    smooth_profile,
)
from rootdiag.seeds import rng_from
from rootdiag.solver import (
    IterationParams,
    ParamGrid,
    StabilizationConfig,
    default_problem,
    run_ensemble,
)
from rootdiag.validation import empirical_order, run_validation_suite
from synth import rate_ensemble

from test_metrics import oracle_metrics
from test_profiler import naive_trailing_mean

WORKERS = 2


@pytest.fixture(scope="session")
def desk_run_a(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_a")
    config = desk_config(global_seed=0, out_dir=str(out))
    t0 = time.perf_counter()
    run_pipeline(config, workers=WORKERS)
    return out, config, time.perf_counter() - t0


@pytest.fixture(scope="session")
def desk_run_b(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_b")
    config = desk_config(global_seed=0, out_dir=str(out))
    run_pipeline(config, workers=WORKERS)
    return out, config


def test_criterion_1_cost_model_exact():
    expected = [(1, 10, 20.0), (3, 12, 16.7), (11, 20, 10.0), (35, 44, 4.5)]
    for T, k_req, speedup in expected:
        est = required_iterations(T, 5, 5, 200)
        assert est.k_req == k_req
        assert round(est.speedup, 1) == speedup
    print("ACCEPTANCE 1 PASS: cost model reproduces the reference (T, k_req, speedup) rows")


def test_criterion_2_setup_constants_and_prefix_locality():
    cfg = EmbeddingConfig()
    assert MetricWindow.for_embedding(cfg).t_start == 10
    assert profile_length(200, cfg) == 191

    stab = StabilizationConfig()
    problem = default_problem()
    grid = ParamGrid(n_alpha=3, n_beta=3, global_seed=17)
    point = grid.point(1, 2)
    T = 12
    k_req = T + 9

    full = run_ensemble(point, problem, 8, 200, stab)
    short = run_ensemble(point, problem, 8, k_req, stab)
    prof_full = proxy_profile([micro_series(t, stab) for t in full], cfg, 200, point.seed)
    prof_short = proxy_profile([micro_series(t, stab) for t in short], cfg, k_req, point.seed)
    assert len(prof_full) == 191
    assert np.array_equal(prof_full.raw[:T], prof_short.raw)
    print("ACCEPTANCE 2 PASS: t_start=10, W=191 at K=200, and T+9-iteration prefixes are exact")


def test_criterion_3_metric_oracles():
    t0 = time.perf_counter()
    rng = rng_from(23)
    window = MetricWindow(t_start=10, t_stop=200)
    for _ in range(1000):
        W = int(rng.integers(8, 80))
        vals = rng.uniform(-2, 2, W)
        prof = ProxyProfile(raw=np.zeros(W), smoothed=vals, lookback=5, smooth_window=1)
        sel = (prof.t_ends >= 10) & (prof.t_ends <= 200)
        m = compute_metrics(prof, window)
        o = oracle_metrics(vals[sel], prof.t_ends[sel].astype(float), window.epsilon)
        for got, want in (
            (m.y_min, o.y_min), (m.s_min, o.s_min), (m.m0, o.m0),
            (m.t_bar, o.t_bar), (m.s_mom, o.s_mom),
        ):
            assert abs(got - want) < 1e-12
        assert m.t_min == o.t_min and m.t_enter_neg == o.t_enter_neg

    for _ in range(1000):
        n = int(rng.integers(1, 50))
        w = int(rng.integers(1, 9))
        raw = rng.standard_normal(n)
        assert np.abs(smooth_profile(raw, w) - naive_trailing_mean(raw, w)).max() < 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(f"ACCEPTANCE 3 PASS: metric and trailing-mean oracles agree to 1e-12 ({elapsed:.1f}s)")


def test_criterion_4_good_subset_count():
    scores = rng_from(31).uniform(0, 1, 3600)
    _, count = good_subset_threshold(scores, 0.2)
    assert count == 720
    print("ACCEPTANCE 4 PASS: fraction 0.2 of 3600 scores selects exactly 720")


def test_criterion_5_split_properties():
    t0 = time.perf_counter()
    manifest = random_split(3600, 0.40, seed=5)
    assert len(manifest.test_ids) == 1440
    assert sorted(manifest.train_ids + manifest.test_ids) == list(range(3600))

    rng = rng_from(37)
    for _ in range(100):
        grid = ParamGrid(
            alpha_range=(float(rng.uniform(-4, 0)), float(rng.uniform(1, 6))),
            beta_range=(float(rng.uniform(-4, 0)), float(rng.uniform(1, 6))),
            n_alpha=int(rng.integers(2, 10)),
            n_beta=int(rng.integers(2, 10)),
        )
        frac = float(rng.uniform(0.1, 0.9))
        split = center_split(grid, frac)

        a_c = sum(grid.alpha_range) / 2
        b_c = sum(grid.beta_range) / 2
        spans = (
            grid.alpha_range[1] - grid.alpha_range[0],
            grid.beta_range[1] - grid.beta_range[0],
        )

        def dist(flat):
            p = grid.point(flat // grid.n_beta, flat % grid.n_beta)
            return ((p.alpha - a_c) / spans[0]) ** 2 + ((p.beta - b_c) / spans[1]) ** 2

        if split.train_ids and split.test_ids:
            assert max(dist(f) for f in split.train_ids) <= min(
                dist(f) for f in split.test_ids
            ) + 1e-12
        assert sorted(split.train_ids + split.test_ids) == list(range(grid.n_points))
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    print(f"ACCEPTANCE 5 PASS: split partition and center dominance hold ({elapsed:.1f}s)")


def test_criterion_6_regression_sanity():
    rng = rng_from(41)
    X = rng.normal(size=(80, 5))
    w = np.array([1.0, -2.0, 0.0, 4.0, 0.5])
    y = X @ w + 2.0

    ridge = fit(ModelSpec("ridge", {"l2": 0.0}), X, y)
    assert np.abs(ridge.state["w"] - w).max() < 1e-6

    knn = fit(ModelSpec("knn", {"k": 1}), X, y)
    assert np.array_equal(predict(knn, X), y)

    assert evaluate(y, y) == (0.0, 0.0, 1.0)
    _, _, r2 = evaluate(y, np.full_like(y, y.mean()))
    assert abs(r2) < 1e-12

    penalty = 0.05
    enet = fit(
        ModelSpec(
            "elastic_net",
            {"penalty": penalty, "l1_ratio": 0.0, "tol": 1e-12, "max_iter": 50000},
        ),
        X,
        y,
    )
    ridge_match = fit(ModelSpec("ridge", {"l2": X.shape[0] * penalty}), X, y)
    Xq = rng.normal(size=(30, 5))
    assert np.abs(predict(enet, Xq) - predict(ridge_match, Xq)).max() < 1e-4
    print("ACCEPTANCE 6 PASS: ridge/knn/evaluate/elastic-net sanity at stated tolerances")


def _best_r2_curve(out: Path, kind: str):
    rows = list(csv.DictReader(open(out / f"best_by_T_{kind}.csv")))
    return [(int(r["T"]), float(r["r2"])) for r in rows]


def test_criterion_7_desk_scale_pipeline(desk_run_a):
    out, config, elapsed = desk_run_a
    assert elapsed < 900.0, f"desk run took {elapsed:.0f}s"

    W = profile_length(config.ensemble.K, config.embedding)
    horizons = list(range(1, min(35, W) + 1, 2))
    records = list(csv.DictReader(open(out / "eval_records.csv")))
    assert sorted({int(r["T"]) for r in records}) == horizons
    assert {r["family"] for r in records} == {
        "knn", "ridge", "elastic_net", "random_forest", "grad_boost"
    }

    for kind in ("random", "center"):
        curve = _best_r2_curve(out, kind)
        dips = [curve[i][1] - curve[i + 1][1] for i in range(len(curve) - 1)]
        assert max(dips) <= 0.05, f"{kind}: r2 dip {max(dips):.3f}"
        assert curve[-1][1] - curve[0][1] >= 0.1, f"{kind}: no r2 gain"

        nonlinear = max(
            float(r["r2"])
            for r in records
            if r["split"] == kind
            and int(r["T"]) <= 5
            and r["family"] in ("knn", "random_forest", "grad_boost")
        )
        linear = max(
            float(r["r2"])
            for r in records
            if r["split"] == kind
            and int(r["T"]) <= 5
            and r["family"] in ("ridge", "elastic_net")
        )
        assert nonlinear > linear, f"{kind}: nonlinear {nonlinear} <= linear {linear}"
    print(
        f"ACCEPTANCE 7 PASS: desk pipeline in {elapsed:.0f}s; r2 saturates upward "
        "with dips <= 0.05 and nonlinear beats linear at T <= 5"
    )


def test_criterion_8_desk_scale_determinism(desk_run_a, desk_run_b):
    out_a, _, _ = desk_run_a
    out_b, _ = desk_run_b
    compared = [
        "metrics_grid.csv",
        "splits/random.json",
        "splits/center.json",
        "predictions_random.csv",
        "predictions_center.csv",
    ]
    compared += [p.relative_to(out_a).as_posix() for p in (out_a / "datasets").glob("*.csv")]
    for rel in compared:
        assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel
    print(f"ACCEPTANCE 8 PASS: {len(compared)} artifacts bit-identical across desk runs")


def test_criterion_9_convergence_validation():
    for p, e0, steps in ((2, 0.05, 5), (3, 0.05, 4), (6, 0.5, 4)):
        errors = [e0]
        for _ in range(steps - 1):
            errors.append(0.7 * errors[-1] ** p)
        assert abs(empirical_order(errors) - p) < 1e-6

    problem = default_problem()
    runs = run_validation_suite(
        problem, IterationParams(0.0, 0.0), ["near_root"], K=15, seed=3
    )
    order = runs[0].observed_order
    assert abs(order - 2.0) <= 0.3, f"observed order {order:.3f}"
    print(f"ACCEPTANCE 9 PASS: synthetic orders exact; origin-family order {order:.2f} = 2 +- 0.3")


def test_criterion_10_proxy_sign_correctness():
    cfg = EmbeddingConfig()
    reps = 50
    hits = 0
    for rep in range(reps):
        contracting = rate_ensemble(0.6, 20, 24, seed=5000 + rep)
        expanding = rate_ensemble(1.6, 20, 24, seed=6000 + rep)
        neg = proxy_profile(contracting, cfg, 24, point_seed=rep).smoothed
        pos = proxy_profile(expanding, cfg, 24, point_seed=rep).smoothed
        if neg.min() < 0 and (pos >= 0).all():
            hits += 1
    assert hits >= 0.9 * reps, f"{hits}/{reps}"
    print(f"ACCEPTANCE 10 PASS: proxy sign correct in {hits}/{reps} repetitions")
