"""Experiment orchestration: staged, resumable, hash-checked artifact pipeline.

Stages run in a fixed order, each reading only persisted outputs of earlier
stages, so any stage can be re-run after deleting its artifacts without
repeating the expensive ensemble generation.  A stage is skipped when its
recorded config fingerprint matches and all of its output files still hash
to the recorded values.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import PipelineConfig
from .datasets import (
    SplitManifest,
    build_horizon_dataset,
    center_split,
    horizon_list,
    random_split,
)
from .errors import ConfigurationError
from .metrics import (
    ProfileMetrics,
    compute_metrics,
    good_subset_mask,
    good_subset_threshold,
    required_iterations,
    timing_summary,
)
from .models import FAMILIES, EvalRecord, ModelSpec, best_by_horizon, evaluate, fit, predict
from .plots import emit_curves, emit_heatmap
from .profiler import ProxyProfile, micro_series, profile_length, proxy_profile
from .seeds import mix64
from .solver import default_problem, run_ensemble
from .validation import run_validation_suite

STAGES = (
    "profile",
    "metrics",
    "dataset",
    "train",
    "evaluate",
    "cost",
    "heatmap",
    "curves",
    "validate",
)

_STREAM_RANDOM_SPLIT = 0x10
_STREAM_MODEL = 0x20

_PROFILE_DEPS = [
    "grid",
    "ensemble",
    "stabilization",
    "embedding",
    "smooth_window",
    "problem_degree",
    "global_seed",
]
_METRICS_DEPS = _PROFILE_DEPS + [
    "metric_t_stop",
    "metric_epsilon",
    "good_fraction",
    "index_origin",
    "hist_bin_width",
]
_DATASET_DEPS = _METRICS_DEPS + ["schedule", "splits"]
_TRAIN_DEPS = _DATASET_DEPS + ["models"]

STAGE_DEPS = {
    "profile": _PROFILE_DEPS,
    "metrics": _METRICS_DEPS,
    "dataset": _DATASET_DEPS,
    "train": _TRAIN_DEPS,
    "evaluate": _TRAIN_DEPS,
    "cost": _TRAIN_DEPS,
    "heatmap": _TRAIN_DEPS + ["heatmap_horizons"],
    "curves": _TRAIN_DEPS,
    "validate": ["stabilization", "validation", "problem_degree", "global_seed"],
}


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return ""
    return repr(x)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stage_fingerprint(config: PipelineConfig, stage: str) -> str:
    d = config.to_dict()
    picked = {k: d[k] for k in STAGE_DEPS[stage]}
    # the grid's own seed field is shadowed by the pipeline global seed
    if "grid" in picked:
        picked["grid"] = dict(picked["grid"], global_seed=config.global_seed)
    blob = json.dumps({"stage": stage, "deps": picked}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ArtifactManifest:
    config: dict
    files: dict = field(default_factory=dict)        # relpath -> {role, sha256}
    stage_seconds: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)
    completed: list = field(default_factory=list)

    def add(self, out: Path, paths: Sequence[tuple[Path, str]]) -> None:
        for path, role in paths:
            rel = str(Path(path).relative_to(out))
            self.files[rel] = {"role": role, "sha256": _sha256(Path(path))}

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "config": self.config,
                    "files": self.files,
                    "stage_seconds": self.stage_seconds,
                    "skipped": self.skipped,
                    "completed": self.completed,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )


# ---------------------------------------------------------------------------
# profile stage


def _profile_point_job(args):
    (point, degree, n_runs, K, stab, embedding, smooth_window, init_strategy) = args
    problem = default_problem(degree)
    trajs = run_ensemble(point, problem, n_runs, K, stab, init_strategy)
    series = [micro_series(t, stab) for t in trajs]
    prof = proxy_profile(series, embedding, K, point.seed, smooth_window)
    diverged = sum(t.diverged for t in trajs) / len(trajs)
    return point.i, point.j, prof.raw, prof.smoothed, diverged


def _write_profile_csv(path: Path, prof_raw, prof_smoothed, lookback: int) -> None:
    with open(path, "w") as fh:
        fh.write("j,t_end,raw,smoothed\n")
        for idx, (r, s) in enumerate(zip(prof_raw, prof_smoothed)):
            j = idx + 1
            fh.write(f"{j},{lookback + j - 1},{_fmt(r)},{_fmt(s)}\n")


def load_profile(path: Path, lookback: int, smooth_window: int) -> ProxyProfile:
    raw, smoothed = [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            raw.append(float(row["raw"]))
            smoothed.append(float(row["smoothed"]))
    return ProxyProfile(
        raw=np.array(raw),
        smoothed=np.array(smoothed),
        lookback=lookback,
        smooth_window=smooth_window,
    )


def _stage_profile(config: PipelineConfig, out: Path, workers: int):
    grid = config.effective_grid
    ens = config.ensemble
    jobs = [
        (
            point,
            config.problem_degree,
            ens.n_runs,
            ens.K,
            config.stabilization,
            config.embedding,
            config.smooth_window,
            ens.init_strategy,
        )
        for point in grid.points()
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_profile_point_job, jobs, chunksize=8))
    else:
        results = [_profile_point_job(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))

    prof_dir = out / "profiles"
    prof_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, j, raw, smoothed, _ in results:
        path = prof_dir / f"{i}_{j}.csv"
        _write_profile_csv(path, raw, smoothed, config.embedding.lookback)
        files.append((path, "profile"))
    div_path = out / "diverged_fraction.csv"
    with open(div_path, "w") as fh:
        fh.write("i,j,diverged_fraction\n")
        for i, j, _, _, frac in results:
            fh.write(f"{i},{j},{_fmt(frac)}\n")
    files.append((div_path, "summary"))
    return files


def _load_all_profiles(config: PipelineConfig, out: Path) -> list[ProxyProfile]:
    grid = config.effective_grid
    return [
        load_profile(
            out / "profiles" / f"{p.i}_{p.j}.csv",
            config.embedding.lookback,
            config.smooth_window,
        )
        for p in grid.points()
    ]


# ---------------------------------------------------------------------------
# metrics stage


_METRIC_COLUMNS = (
    "i,j,alpha,beta,s_min,s_mom,t_min,y_min,t_enter_neg,m0,t_bar,diverged_fraction"
)


def _stage_metrics(config: PipelineConfig, out: Path, workers: int):
    grid = config.effective_grid
    profiles = _load_all_profiles(config, out)
    window = config.metric_window
    metrics = [compute_metrics(p, window) for p in profiles]

    diverged = {}
    with open(out / "diverged_fraction.csv") as fh:
        for row in csv.DictReader(fh):
            diverged[(int(row["i"]), int(row["j"]))] = float(row["diverged_fraction"])

    path = out / "metrics_grid.csv"
    with open(path, "w") as fh:
        fh.write(_METRIC_COLUMNS + "\n")
        for point, m in zip(grid.points(), metrics):
            enter = "" if m.t_enter_neg is None else str(m.t_enter_neg)
            fh.write(
                f"{point.i},{point.j},{_fmt(point.alpha)},{_fmt(point.beta)},"
                f"{_fmt(m.s_min)},{_fmt(m.s_mom)},{m.t_min},{_fmt(m.y_min)},"
                f"{enter},{_fmt(m.m0)},{_fmt(m.t_bar)},"
                f"{_fmt(diverged[(point.i, point.j)])}\n"
            )
    files = [(path, "metrics")]

    scores = np.array([m.s_mom for m in metrics])
    mask = good_subset_mask(scores, config.good_fraction)
    threshold, count = good_subset_threshold(scores, config.good_fraction)
    summary = timing_summary(
        metrics,
        mask,
        config.embedding.lookback,
        config.embedding.h_max,
        config.index_origin,
        config.hist_bin_width,
    )
    for name, hist in (
        ("timing_hist_t_min.csv", summary.hist_t_min),
        ("timing_hist_t_enter_neg.csv", summary.hist_t_enter_neg),
    ):
        hpath = out / name
        with open(hpath, "w") as fh:
            fh.write("bin_left,count_good,count_rest\n")
            for left, cg, cr in zip(hist.bin_left, hist.count_good, hist.count_rest):
                fh.write(f"{_fmt(left)},{int(cg)},{int(cr)}\n")
        files.append((hpath, "timing"))

    spath = out / "timing_summary.json"
    spath.write_text(
        json.dumps(
            {
                "median_t_min_good": summary.median_t_min_good,
                "t_min_profile_index": summary.t_min_profile_index,
                "index_origin": config.index_origin,
                "good_fraction": config.good_fraction,
                "good_threshold": threshold,
                "good_count": count,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    files.append((spath, "summary"))
    return files


def _load_metrics(out: Path) -> list[ProfileMetrics]:
    rows = []
    with open(out / "metrics_grid.csv") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                ProfileMetrics(
                    t_min=int(row["t_min"]),
                    y_min=float(row["y_min"]),
                    s_min=float(row["s_min"]),
                    m0=float(row["m0"]),
                    t_bar=float(row["t_bar"]),
                    s_mom=float(row["s_mom"]),
                    t_enter_neg=int(row["t_enter_neg"]) if row["t_enter_neg"] else None,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# dataset stage


def _scanned_horizons(config: PipelineConfig) -> list[int]:
    W = profile_length(config.ensemble.K, config.embedding)
    return horizon_list(config.schedule, W)


def _stage_dataset(config: PipelineConfig, out: Path, workers: int):
    grid = config.effective_grid
    profiles = _load_all_profiles(config, out)
    metrics = _load_metrics(out)
    point_ids = [(p.i, p.j) for p in grid.points()]

    split_dir = out / "splits"
    split_dir.mkdir(parents=True, exist_ok=True)
    rsplit = random_split(
        grid.n_points,
        config.splits.random_test_fraction,
        mix64(config.global_seed, _STREAM_RANDOM_SPLIT),
    )
    csplit = center_split(grid, config.splits.center_train_fraction)
    files = []
    for manifest in (rsplit, csplit):
        path = split_dir / f"{manifest.kind}.json"
        manifest.save(path)
        files.append((path, "split"))

    ds_dir = out / "datasets"
    ds_dir.mkdir(parents=True, exist_ok=True)
    for T in _scanned_horizons(config):
        ds = build_horizon_dataset(profiles, metrics, point_ids, T)
        path = ds_dir / f"dataset_T{T}.csv"
        with open(path, "w") as fh:
            fh.write("i,j," + ",".join(f"x{k}" for k in range(1, T + 1)) + ",target\n")
            for (pi, pj), feats, target in zip(ds.point_ids, ds.features, ds.targets):
                fh.write(
                    f"{pi},{pj},"
                    + ",".join(_fmt(v) for v in feats)
                    + f",{_fmt(target)}\n"
                )
        files.append((path, "dataset"))
    return files


def _load_dataset(out: Path, T: int) -> tuple[np.ndarray, np.ndarray]:
    feats, targets = [], []
    with open(out / "datasets" / f"dataset_T{T}.csv") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            feats.append([float(v) for v in row[2:-1]])
            targets.append(float(row[-1]))
    return np.array(feats), np.array(targets)


# ---------------------------------------------------------------------------
# train stage


def _train_job(args):
    split_kind, family, hyperparameters, seed, T, X_tr, y_tr, X_te, y_te = args
    spec = ModelSpec(family, hyperparameters, seed=seed)
    model = fit(spec, X_tr, y_tr)
    t0 = time.perf_counter()
    y_pred = predict(model, X_te)
    test_seconds = time.perf_counter() - t0
    return split_kind, family, T, model.fit_seconds, test_seconds, y_pred


def _stage_train(config: PipelineConfig, out: Path, workers: int):
    grid = config.effective_grid
    horizons = _scanned_horizons(config)
    splits = {
        kind: SplitManifest.load(out / "splits" / f"{kind}.json")
        for kind in ("random", "center")
    }
    datasets = {T: _load_dataset(out, T) for T in horizons}
    point_ids = [(p.i, p.j) for p in grid.points()]

    jobs = []
    for kind, manifest in splits.items():
        train_ids = np.array(manifest.train_ids)
        test_ids = np.array(manifest.test_ids)
        for entry in config.models:
            for T in horizons:
                X, y = datasets[T]
                seed = mix64(
                    config.global_seed,
                    _STREAM_MODEL,
                    ("random", "center").index(kind),
                    FAMILIES.index(entry.family),
                    T,
                )
                jobs.append(
                    (
                        kind,
                        entry.family,
                        entry.hyperparameters,
                        seed,
                        T,
                        X[train_ids],
                        y[train_ids],
                        X[test_ids],
                        y[test_ids],
                    )
                )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_job, jobs, chunksize=1))
    else:
        results = [_train_job(j) for j in jobs]

    order = {
        (kind, fam, T): (("random", "center").index(kind), FAMILIES.index(fam), T)
        for kind, fam, T, *_ in results
    }
    results.sort(key=lambda r: order[(r[0], r[1], r[2])])

    files = []
    timing_path = out / "train_timings.csv"
    with open(timing_path, "w") as fh:
        fh.write("split,family,T,fit_seconds,test_seconds\n")
        for kind, fam, T, fit_s, test_s, _ in results:
            fh.write(f"{kind},{fam},{T},{_fmt(fit_s)},{_fmt(test_s)}\n")
    files.append((timing_path, "timings"))

    for kind, manifest in splits.items():
        path = out / f"predictions_{kind}.csv"
        test_ids = manifest.test_ids
        with open(path, "w") as fh:
            fh.write("family,T,i,j,y_true,y_pred\n")
            for rkind, fam, T, _, _, y_pred in results:
                if rkind != kind:
                    continue
                _, y = datasets[T]
                for flat, pred_val in zip(test_ids, y_pred):
                    pi, pj = point_ids[flat]
                    fh.write(
                        f"{fam},{T},{pi},{pj},{_fmt(y[flat])},{_fmt(pred_val)}\n"
                    )
        files.append((path, "predictions"))
    return files


# ---------------------------------------------------------------------------
# evaluate stage


def _load_predictions(out: Path, kind: str):
    table: dict[tuple[str, int], list[tuple[float, float]]] = {}
    with open(out / f"predictions_{kind}.csv") as fh:
        for row in csv.DictReader(fh):
            key = (row["family"], int(row["T"]))
            table.setdefault(key, []).append(
                (float(row["y_true"]), float(row["y_pred"]))
            )
    return table


def eval_records_for(out: Path, kind: str) -> list[EvalRecord]:
    timings = {}
    with open(out / "train_timings.csv") as fh:
        for row in csv.DictReader(fh):
            if row["split"] == kind:
                timings[(row["family"], int(row["T"]))] = (
                    float(row["fit_seconds"]),
                    float(row["test_seconds"]),
                )
    records = []
    for (family, T), pairs in sorted(
        _load_predictions(out, kind).items(),
        key=lambda kv: (FAMILIES.index(kv[0][0]), kv[0][1]),
    ):
        y_true = np.array([p[0] for p in pairs])
        y_pred = np.array([p[1] for p in pairs])
        mae, rmse, r2 = evaluate(y_true, y_pred)
        fit_s, test_s = timings[(family, T)]
        records.append(
            EvalRecord(
                split=kind,
                family=family,
                horizon=T,
                mae=mae,
                rmse=rmse,
                r2=r2,
                fit_seconds=fit_s,
                test_seconds=test_s,
                test_per_sample_seconds=test_s / len(pairs),
            )
        )
    return records


def _stage_evaluate(config: PipelineConfig, out: Path, workers: int):
    files = []
    all_records = []
    for kind in ("random", "center"):
        all_records.extend(eval_records_for(out, kind))
    path = out / "eval_records.csv"
    with open(path, "w") as fh:
        fh.write("split,family,T,mae,rmse,r2,fit_s,test_s,test_per_sample_s\n")
        for r in all_records:
            fh.write(
                f"{r.split},{r.family},{r.horizon},{_fmt(r.mae)},{_fmt(r.rmse)},"
                f"{_fmt(r.r2)},{_fmt(r.fit_seconds)},{_fmt(r.test_seconds)},"
                f"{_fmt(r.test_per_sample_seconds)}\n"
            )
    files.append((path, "eval"))

    for kind in ("random", "center"):
        best = best_by_horizon([r for r in all_records if r.split == kind])
        bpath = out / f"best_by_T_{kind}.csv"
        with open(bpath, "w") as fh:
            fh.write("T,best_family,r2,fit_s,test_s,test_per_sample_s\n")
            for r in best:
                fh.write(
                    f"{r.horizon},{r.family},{_fmt(r.r2)},{_fmt(r.fit_seconds)},"
                    f"{_fmt(r.test_seconds)},{_fmt(r.test_per_sample_seconds)}\n"
                )
        files.append((bpath, "best"))
    return files


def _load_eval_records(out: Path) -> list[EvalRecord]:
    records = []
    with open(out / "eval_records.csv") as fh:
        for row in csv.DictReader(fh):
            records.append(
                EvalRecord(
                    split=row["split"],
                    family=row["family"],
                    horizon=int(row["T"]),
                    mae=float(row["mae"]),
                    rmse=float(row["rmse"]),
                    r2=float(row["r2"]) if row["r2"] else -math.inf,
                    fit_seconds=float(row["fit_s"]),
                    test_seconds=float(row["test_s"]),
                    test_per_sample_seconds=float(row["test_per_sample_s"]),
                )
            )
    return records


# ---------------------------------------------------------------------------
# cost / heatmap / curves stages


def _best_r2_by_T(out: Path, kind: str) -> dict[int, tuple[str, float]]:
    path = out / f"best_by_T_{kind}.csv"
    best = {}
    if not path.exists():
        return best
    with open(path) as fh:
        for row in csv.DictReader(fh):
            best[int(row["T"])] = (
                row["best_family"],
                float(row["r2"]) if row["r2"] else -math.inf,
            )
    return best


def _stage_cost(config: PipelineConfig, out: Path, workers: int):
    best = {kind: _best_r2_by_T(out, kind) for kind in ("random", "center")}
    path = out / "cost_table.csv"
    with open(path, "w") as fh:
        fh.write("T,k_req,speedup,r2_center,r2_random\n")
        for T in _scanned_horizons(config):
            est = required_iterations(
                T,
                config.embedding.lookback,
                config.embedding.h_max,
                config.ensemble.K,
            )
            r2c = best["center"].get(T)
            r2r = best["random"].get(T)
            fh.write(
                f"{T},{est.k_req},{_fmt(est.speedup)},"
                f"{_fmt(r2c[1]) if r2c else ''},{_fmt(r2r[1]) if r2r else ''}\n"
            )
    return [(path, "cost")]


def _metric_matrices(config: PipelineConfig, out: Path):
    grid = config.effective_grid
    s_min = np.full((grid.n_alpha, grid.n_beta), np.nan)
    s_mom = np.full((grid.n_alpha, grid.n_beta), np.nan)
    with open(out / "metrics_grid.csv") as fh:
        for row in csv.DictReader(fh):
            i, j = int(row["i"]), int(row["j"])
            s_min[i, j] = float(row["s_min"])
            s_mom[i, j] = float(row["s_mom"])
    return s_min, s_mom


def _stage_heatmap(config: PipelineConfig, out: Path, workers: int):
    grid = config.effective_grid
    extent = (*grid.alpha_range, *grid.beta_range)
    hm_dir = out / "heatmaps"
    s_min, s_mom = _metric_matrices(config, out)
    files = []
    for name, mat in (("s_min_true", s_min), ("s_mom_true", s_mom)):
        for p in emit_heatmap(mat, None, hm_dir / name, title=name, extent=extent):
            files.append((p, "heatmap"))

    vmin, vmax = float(np.nanmin(s_mom)), float(np.nanmax(s_mom))
    scanned = set(_scanned_horizons(config))
    for kind in ("random", "center"):
        manifest = SplitManifest.load(out / "splits" / f"{kind}.json")
        best = _best_r2_by_T(out, kind)
        preds = _load_predictions_by_point(out, kind)
        for T in config.heatmap_horizons:
            if T not in scanned or T not in best:
                continue
            family = best[T][0]
            mat = np.full((grid.n_alpha, grid.n_beta), np.nan)
            for (pi, pj), val in preds.get((family, T), {}).items():
                mat[pi, pj] = val
            name = f"pred_{kind}_T{T}_{family}"
            for p in emit_heatmap(
                mat,
                manifest.train_ids,
                hm_dir / name,
                title=name,
                vmin=vmin,
                vmax=vmax,
                extent=extent,
            ):
                files.append((p, "heatmap"))
    return files


def _load_predictions_by_point(out: Path, kind: str):
    table: dict[tuple[str, int], dict[tuple[int, int], float]] = {}
    with open(out / f"predictions_{kind}.csv") as fh:
        for row in csv.DictReader(fh):
            key = (row["family"], int(row["T"]))
            table.setdefault(key, {})[(int(row["i"]), int(row["j"]))] = float(
                row["y_pred"]
            )
    return table


def _stage_curves(config: PipelineConfig, out: Path, workers: int):
    records = _load_eval_records(out)
    summary = json.loads((out / "timing_summary.json").read_text())
    marker = int(summary["t_min_profile_index"])
    files = []
    for kind in ("random", "center"):
        split_records = [r for r in records if r.split == kind]
        for p in emit_curves(
            split_records, marker, out / "curves" / f"curves_{kind}", title_prefix=kind
        ):
            files.append((p, "curves"))
    return files


def _stage_validate(config: PipelineConfig, out: Path, workers: int):
    from .solver import IterationParams

    problem = default_problem(config.problem_degree)
    v = config.validation
    runs = run_validation_suite(
        problem,
        IterationParams(v.alpha, v.beta),
        list(v.strategies),
        v.K,
        tol=v.tol,
        seed=config.global_seed,
        stab=config.stabilization,
    )
    err_path = out / "validation_errors.csv"
    with open(err_path, "w") as fh:
        fh.write("strategy,k,E\n")
        for run in runs:
            for k, e in enumerate(run.errors):
                fh.write(f"{run.strategy},{k},{_fmt(e)}\n")
    sum_path = out / "validation_summary.csv"
    with open(sum_path, "w") as fh:
        fh.write("strategy,iterations_to_tol,observed_order\n")
        for run in runs:
            its = "" if run.iterations_to_tol is None else str(run.iterations_to_tol)
            order = "" if math.isnan(run.observed_order) else _fmt(run.observed_order)
            fh.write(f"{run.strategy},{its},{order}\n")
    return [(err_path, "validation"), (sum_path, "validation")]


_STAGE_FN = {
    "profile": _stage_profile,
    "metrics": _stage_metrics,
    "dataset": _stage_dataset,
    "train": _stage_train,
    "evaluate": _stage_evaluate,
    "cost": _stage_cost,
    "heatmap": _stage_heatmap,
    "curves": _stage_curves,
    "validate": _stage_validate,
}


def _state_path(out: Path, stage: str) -> Path:
    return out / ".stage" / f"{stage}.json"


def _stage_is_valid(out: Path, stage: str, fingerprint: str) -> Optional[dict]:
    path = _state_path(out, stage)
    if not path.exists():
        return None
    try:
        state = json.loads(path.read_text())
    except json.JSONDecodeError:
        return None
    if state.get("fingerprint") != fingerprint:
        return None
    for rel, meta in state.get("files", {}).items():
        fpath = out / rel
        if not fpath.exists() or _sha256(fpath) != meta["sha256"]:
            return None
    return state


def run_pipeline(
    config: PipelineConfig,
    stages: Optional[Sequence[str]] = None,
    workers: int = 1,
    force: bool = False,
) -> ArtifactManifest:
    """Run the requested stages (all by default), resuming where possible."""
    for stage in stages or ():
        if stage not in STAGES:
            raise ConfigurationError(f"unknown stage: {stage!r}")
    selected = [s for s in STAGES if stages is None or s in stages]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / ".stage").mkdir(exist_ok=True)

    snapshot = out / "config_snapshot.json"
    snapshot.write_text(config.to_json() + "\n")

    manifest = ArtifactManifest(config=config.to_dict())
    manifest.files["config_snapshot.json"] = {
        "role": "config",
        "sha256": _sha256(snapshot),
    }
    try:
        for stage in selected:
            fingerprint = stage_fingerprint(config, stage)
            state = None if force else _stage_is_valid(out, stage, fingerprint)
            t0 = time.perf_counter()
            if state is not None:
                manifest.skipped.append(stage)
                for rel, meta in state["files"].items():
                    manifest.files[rel] = dict(meta)
            else:
                produced = _STAGE_FN[stage](config, out, workers)
                state = {
                    "fingerprint": fingerprint,
                    "files": {
                        str(Path(p).relative_to(out)): {
                            "role": role,
                            "sha256": _sha256(Path(p)),
                        }
                        for p, role in produced
                    },
                }
                _state_path(out, stage).write_text(
                    json.dumps(state, indent=2, sort_keys=True) + "\n"
                )
                for rel, meta in state["files"].items():
                    manifest.files[rel] = dict(meta)
            manifest.stage_seconds[stage] = time.perf_counter() - t0
            manifest.completed.append(stage)
    finally:
        manifest.save(out / "manifest.json")
    return manifest
