"""Contractivity proxy profiles from trajectory ensembles.

For one grid cell, the ensemble of log-step-norm micro-series feeds a kNN
forecaster on delay-embedded windows.  At each window end t_end the slope of
log forecast RMSE versus horizon acts as a largest-Lyapunov-exponent proxy:
negative values mean the ensemble dynamics are locally contractive,
positive values locally expansive.

Index convention: profile entry j (1-based) uses the embedding window ending
after t_end = L + j - 1 solver iterations, i.e. micro-series entries
[t_end - L, t_end) with forecast targets at t_end + h - 1 (0-based).  The
profile therefore has W = K - h_max - L + 1 entries and entry j needs only
the first j + L + h_max - 1 iterations of each trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .seeds import rng_from, shuffle_seed
from .solver import StabilizationConfig, Trajectory


@dataclass
class MicroSeries:
    """Per-run log step-norm sequence; frozen tail pinned at the floor."""

    values: np.ndarray
    frozen_from: Optional[int] = None


@dataclass(frozen=True)
class EmbeddingConfig:
    lookback: int = 5
    h_min: int = 1
    h_max: int = 5
    k_neighbors: int = 3
    internal_train_fraction: float = 0.60
    error_floor: float = 1e-12

    def __post_init__(self):
        if self.lookback < 1:
            raise ConfigurationError("lookback must be >= 1")
        if self.h_min < 1 or self.h_max < self.h_min:
            raise ConfigurationError("need 1 <= h_min <= h_max")
        if self.k_neighbors < 1:
            raise ConfigurationError("k_neighbors must be >= 1")
        if not (0.0 < self.internal_train_fraction < 1.0):
            raise ConfigurationError("internal_train_fraction must be in (0, 1)")
        if self.error_floor <= 0:
            raise ConfigurationError("error_floor must be positive")

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(self.h_min, self.h_max + 1)


def profile_length(K: int, cfg: EmbeddingConfig) -> int:
    return K - cfg.h_max - cfg.lookback + 1


@dataclass
class ProxyProfile:
    raw: np.ndarray
    smoothed: np.ndarray
    lookback: int
    smooth_window: int = 4

    def __len__(self) -> int:
        return self.raw.size

    def t_end_of(self, j: int) -> int:
        """Solver iteration count consumed by profile entry j (1-based)."""
        return self.lookback + j - 1

    @property
    def t_ends(self) -> np.ndarray:
        return self.lookback + np.arange(self.raw.size)


def micro_series(traj: Trajectory, stab: StabilizationConfig) -> MicroSeries:
    """Log step norms; the frozen tail carries exactly tail_floor_log."""
    norms = np.asarray(traj.step_norms, dtype=np.float64)
    if not (norms > 0).all():
        raise ConfigurationError("step norms must be positive (tail floor)")
    y = np.log(norms)
    if traj.frozen_from is not None:
        y[traj.frozen_from:] = stab.tail_floor_log
    return MicroSeries(values=y, frozen_from=traj.frozen_from)


def least_squares_slope(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xc = x - x.mean()
    den = (xc * xc).sum()
    if den == 0.0:
        return 0.0
    return float((xc * (y - y.mean())).sum() / den)


def _proxy_from_matrix(
    Y: np.ndarray, t_end: int, cfg: EmbeddingConfig, rng: np.random.Generator
) -> float:
    n, K = Y.shape
    if n < 2:
        raise ConfigurationError("need at least 2 runs for the internal split")
    if t_end < cfg.lookback:
        raise ConfigurationError(f"t_end {t_end} shorter than lookback {cfg.lookback}")
    if t_end + cfg.h_max - 1 >= K:
        raise ConfigurationError(f"t_end {t_end} leaves no room for horizon {cfg.h_max}")

    n_train = math.ceil(cfg.internal_train_fraction * n)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    if test_idx.size == 0:
        raise ConfigurationError("internal split left no test runs")
    k = min(cfg.k_neighbors, train_idx.size)

    X = Y[:, t_end - cfg.lookback : t_end]
    diff = X[test_idx][:, None, :] - X[train_idx][None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    # stable sort over train columns in ascending run-index order breaks
    # distance ties toward the lower run index
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]

    errors = np.empty(cfg.h_max - cfg.h_min + 1)
    for pos, h in enumerate(range(cfg.h_min, cfg.h_max + 1)):
        targets = Y[:, t_end + h - 1]
        pred = targets[train_idx][neighbors].mean(axis=1)
        resid = targets[test_idx] - pred
        errors[pos] = math.sqrt(float((resid * resid).mean()))
    errors = np.maximum(errors, cfg.error_floor)
    return least_squares_slope(cfg.horizons, np.log(errors))


def lle_proxy_at(
    ensemble: Sequence[MicroSeries],
    t_end: int,
    cfg: EmbeddingConfig,
    rng: np.random.Generator,
) -> float:
    """Forecast-error slope proxy at one window end.

    Each run contributes one embedded vector (its last `lookback` values
    before t_end) with one target per horizon.  Runs are shuffled into an
    internal train/test split; test targets are predicted as the mean target
    of the k nearest train embeddings, and the per-horizon RMSEs (floored at
    error_floor) are regressed as log e(h) ~ h.
    """
    Y = np.stack([np.asarray(m.values, dtype=np.float64) for m in ensemble])
    return _proxy_from_matrix(Y, t_end, cfg, rng)


def smooth_profile(raw: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over the last `window` entries (shorter at the start)."""
    if window < 1:
        raise ConfigurationError("window must be >= 1")
    raw = np.asarray(raw, dtype=np.float64)
    out = np.empty_like(raw)
    for idx in range(raw.size):
        lo = max(0, idx - window + 1)
        out[idx] = raw[lo : idx + 1].mean()
    return out


def proxy_profile(
    ensemble: Sequence[MicroSeries],
    cfg: EmbeddingConfig,
    K: int,
    point_seed: int,
    smooth_window: int = 4,
) -> ProxyProfile:
    """Full raw + smoothed profile for one grid cell.

    The internal shuffle at each t_end is seeded by (point_seed, t_end) only,
    so any prefix of the profile is independent of K and of evaluation order.
    """
    if not ensemble:
        raise ConfigurationError("empty ensemble")
    W = profile_length(K, cfg)
    if K < cfg.lookback + cfg.h_max + 1:
        raise ConfigurationError(
            f"K={K} too small for lookback {cfg.lookback} and horizon {cfg.h_max}"
        )
    Y = np.stack([np.asarray(m.values, dtype=np.float64) for m in ensemble])
    if Y.shape[1] != K:
        raise ConfigurationError("micro-series length differs from K")
    raw = np.empty(W)
    for j in range(1, W + 1):
        t_end = cfg.lookback + j - 1
        rng = rng_from(shuffle_seed(point_seed, t_end))
        raw[j - 1] = _proxy_from_matrix(Y, t_end, cfg, rng)
    return ProxyProfile(
        raw=raw,
        smoothed=smooth_profile(raw, smooth_window),
        lookback=cfg.lookback,
        smooth_window=smooth_window,
    )
