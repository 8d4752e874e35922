"""Multi-horizon prefix datasets and train/test split manifests.

Feature rows are raw-profile prefixes of length T per grid point (row-major
(i, j) order); targets are the final s_mom scores from the smoothed profile.
Point ids are flat row-major indices into the grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .metrics import ProfileMetrics, round_half_up
from .profiler import ProxyProfile
from .seeds import rng_from
from .solver import ParamGrid


@dataclass
class HorizonDataset:
    horizon: int
    features: np.ndarray
    targets: np.ndarray
    point_ids: list[tuple[int, int]]


@dataclass
class SplitManifest:
    kind: str
    train_ids: list[int]
    test_ids: list[int]
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "parameters": self.parameters,
                "train_ids": self.train_ids,
                "test_ids": self.test_ids,
            },
            indent=0,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        d = json.loads(text)
        return cls(
            kind=d["kind"],
            train_ids=list(d["train_ids"]),
            test_ids=list(d["test_ids"]),
            parameters=d["parameters"],
        )

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: Path) -> "SplitManifest":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class HorizonSchedule:
    start: int = 1
    step: int = 2
    max_T: int = 35

    def __post_init__(self):
        if self.start < 1 or self.step < 1 or self.max_T < self.start:
            raise ConfigurationError("invalid horizon schedule")


def horizon_list(schedule: HorizonSchedule, W: int) -> list[int]:
    """Arithmetic horizon sequence capped at min(max_T, W)."""
    if W < 1:
        raise ConfigurationError("profile length must be >= 1")
    top = min(schedule.max_T, W)
    return list(range(schedule.start, top + 1, schedule.step))


def build_horizon_dataset(
    profiles: Sequence[ProxyProfile],
    metrics: Sequence[ProfileMetrics],
    point_ids: Sequence[tuple[int, int]],
    T: int,
) -> HorizonDataset:
    """Stack length-T raw prefixes as features, s_mom as targets."""
    if not (len(profiles) == len(metrics) == len(point_ids)):
        raise ConfigurationError("profiles, metrics and ids must align")
    rows = []
    for profile, pid in zip(profiles, point_ids):
        if len(profile) < T:
            raise ConfigurationError(
                f"profile at point {pid} has length {len(profile)} < T={T}"
            )
        rows.append(profile.raw[:T])
    return HorizonDataset(
        horizon=T,
        features=np.array(rows, dtype=np.float64),
        targets=np.array([m.s_mom for m in metrics], dtype=np.float64),
        point_ids=list(point_ids),
    )


def random_split(n: int, test_fraction: float, seed: int) -> SplitManifest:
    """Seeded shuffle of all ids; the last round(test_fraction * n) are test."""
    if not (0.0 < test_fraction < 1.0):
        raise ConfigurationError("test_fraction must be in (0, 1)")
    perm = rng_from(seed).permutation(n)
    n_test = round_half_up(test_fraction * n)
    return SplitManifest(
        kind="random",
        train_ids=[int(p) for p in perm[: n - n_test]],
        test_ids=[int(p) for p in perm[n - n_test :]],
        parameters={"test_fraction": test_fraction, "seed": seed},
    )


def center_split(grid: ParamGrid, train_fraction: float) -> SplitManifest:
    """Train on the most central fraction of the parameter domain.

    Distance is the squared offset from the range midpoint, normalized per
    axis by its range, so unequal alpha/beta spans weigh equally.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ConfigurationError("train_fraction must be in (0, 1)")
    a_lo, a_hi = grid.alpha_range
    b_lo, b_hi = grid.beta_range
    a_c, b_c = (a_lo + a_hi) / 2.0, (b_lo + b_hi) / 2.0
    a_span, b_span = a_hi - a_lo, b_hi - b_lo

    ranked = []
    for p in grid.points():
        d = ((p.alpha - a_c) / a_span) ** 2 + ((p.beta - b_c) / b_span) ** 2
        ranked.append((d, p.i, p.j))
    ranked.sort()

    n = grid.n_points
    n_train = round_half_up(train_fraction * n)
    ids = [i * grid.n_beta + j for _, i, j in ranked]
    return SplitManifest(
        kind="center",
        train_ids=ids[:n_train],
        test_ids=ids[n_train:],
        parameters={"train_fraction": train_fraction},
    )
