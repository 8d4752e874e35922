"""Reliability scores, good-subset selection, timing statistics, cost model.

Two scalar scores summarize a smoothed proxy profile over a fixed window on
the solver-iteration axis:

  s_min = -y_min / (t_min + eps)          depth of the minimum over its delay
  s_mom = m0 / (t_bar + eps)              negative mass over its time centroid

where m0 sums the negative part of the profile and t_bar is that mass's
centroid.  Larger s_mom means earlier and stronger contraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .profiler import EmbeddingConfig, ProxyProfile


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MetricWindow:
    """Evaluation window in solver-iteration (t_end) units."""

    t_start: int = 10
    t_stop: int = 200
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.t_stop <= self.t_start:
            raise ConfigurationError("need t_stop > t_start")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")

    @classmethod
    def for_embedding(
        cls, cfg: EmbeddingConfig, t_stop: int = 200, epsilon: float = 1e-8
    ) -> "MetricWindow":
        return cls(
            t_start=max(10, cfg.lookback + cfg.h_max), t_stop=t_stop, epsilon=epsilon
        )


@dataclass
class ProfileMetrics:
    t_min: int
    y_min: float
    s_min: float
    m0: float
    t_bar: float
    s_mom: float
    t_enter_neg: Optional[int] = None


def compute_metrics(profile: ProxyProfile, window: MetricWindow) -> ProfileMetrics:
    """Score one smoothed profile over the window (earliest index on ties)."""
    t_ends = profile.t_ends
    sel = (t_ends >= window.t_start) & (t_ends <= window.t_stop)
    if not sel.any():
        raise ConfigurationError("metric window does not overlap the profile")
    t = t_ends[sel].astype(np.float64)
    v = profile.smoothed[sel]
    eps = window.epsilon

    idx = int(np.argmin(v))
    t_min = int(t[idx])
    y_min = float(v[idx])
    s_min = -y_min / (t_min + eps)

    neg = np.maximum(0.0, -v)
    m0 = float(neg.sum())
    t_bar = float((t * neg).sum() / (m0 + eps))
    s_mom = m0 / (t_bar + eps)

    below = v < 0
    t_enter_neg = int(t[np.argmax(below)]) if below.any() else None
    return ProfileMetrics(
        t_min=t_min,
        y_min=y_min,
        s_min=s_min,
        m0=m0,
        t_bar=t_bar,
        s_mom=s_mom,
        t_enter_neg=t_enter_neg,
    )


def _ranked_indices(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score, ties broken toward the earlier index."""
    n = scores.size
    return np.lexsort((np.arange(n), -scores))


def good_subset_threshold(
    scores: Sequence[float], fraction: float
) -> tuple[float, int]:
    """Top-fraction cut: selected_count = round(fraction * n), half up."""
    if not (0.0 < fraction < 1.0):
        raise ConfigurationError("fraction must be in (0, 1)")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigurationError("scores must be nonempty")
    count = round_half_up(fraction * scores.size)
    if count == 0:
        return math.inf, 0
    order = _ranked_indices(scores)
    return float(scores[order[count - 1]]), count


def good_subset_mask(scores: Sequence[float], fraction: float) -> np.ndarray:
    """Boolean mask of the selected top-fraction points (count forced exactly)."""
    scores = np.asarray(scores, dtype=np.float64)
    _, count = good_subset_threshold(scores, fraction)
    mask = np.zeros(scores.size, dtype=bool)
    mask[_ranked_indices(scores)[:count]] = True
    return mask


@dataclass
class Histogram:
    bin_left: np.ndarray
    count_good: np.ndarray
    count_rest: np.ndarray


@dataclass
class TimingSummary:
    median_t_min_good: float
    t_min_profile_index: int
    hist_t_min: Histogram
    hist_t_enter_neg: Histogram


def profile_index_of(t_end: float, lookback: int, h_max: int, origin: str) -> float:
    """Map a solver-iteration index to a profile index.

    origin="lookback": index 1 sits at t_end = lookback (the native profile
    indexing used throughout this package).  origin="embed": index 1 sits at
    t_end = lookback + h_max, counting only windows whose full multi-horizon
    targets are observed.
    """
    if origin == "lookback":
        return t_end - lookback + 1
    if origin == "embed":
        return t_end - (lookback + h_max) + 1
    raise ConfigurationError(f"unknown profile index origin: {origin!r}")


def _binned(values_good, values_rest, bin_width):
    allv = np.concatenate([values_good, values_rest])
    if allv.size == 0:
        return Histogram(np.array([]), np.array([], int), np.array([], int))
    lo = math.floor(allv.min() / bin_width) * bin_width
    hi = math.floor(allv.max() / bin_width) * bin_width
    lefts = np.arange(lo, hi + bin_width, bin_width)

    def counts(vals):
        c = np.zeros(lefts.size, dtype=np.int64)
        for v in vals:
            c[int((v - lo) // bin_width)] += 1
        return c

    return Histogram(lefts, counts(values_good), counts(values_rest))


def timing_summary(
    metrics: Sequence[ProfileMetrics],
    good_mask: Sequence[bool],
    lookback: int,
    h_max: int,
    index_origin: str = "lookback",
    bin_width: int = 5,
) -> TimingSummary:
    """Timing distributions of contractivity signatures, good subset vs rest."""
    good_mask = np.asarray(good_mask, dtype=bool)
    if good_mask.size != len(metrics):
        raise ConfigurationError("mask length must match metrics")
    if not good_mask.any():
        raise ConfigurationError("good subset is empty")

    t_min = np.array([m.t_min for m in metrics], dtype=np.float64)
    median = float(np.median(t_min[good_mask]))
    t_min_index = round_half_up(profile_index_of(median, lookback, h_max, index_origin))

    enter_good = np.array(
        [m.t_enter_neg for m, g in zip(metrics, good_mask) if g and m.t_enter_neg is not None],
        dtype=np.float64,
    )
    enter_rest = np.array(
        [m.t_enter_neg for m, g in zip(metrics, good_mask) if not g and m.t_enter_neg is not None],
        dtype=np.float64,
    )
    return TimingSummary(
        median_t_min_good=median,
        t_min_profile_index=t_min_index,
        hist_t_min=_binned(t_min[good_mask], t_min[~good_mask], bin_width),
        hist_t_enter_neg=_binned(enter_good, enter_rest, bin_width),
    )


@dataclass(frozen=True)
class CostEstimate:
    horizon: int
    k_req: int
    speedup: float


def required_iterations(T: int, lookback: int = 5, h_max: int = 5, K: int = 200) -> CostEstimate:
    """Solver iterations needed per trajectory for a length-T profile prefix."""
    if T < 1:
        raise ConfigurationError("T must be >= 1")
    k_req = T + lookback + h_max - 1
    return CostEstimate(horizon=T, k_req=k_req, speedup=K / k_req)
