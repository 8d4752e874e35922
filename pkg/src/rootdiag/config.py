"""Pipeline configuration: nested dataclasses with JSON round-trip.

Defaults reproduce the full experiment protocol (60x60 grid over
alpha in [-3, 5] x beta in [-2, 4], 1000 runs x 200 iterations per cell);
`desk_config` is the small preset used for quick end-to-end runs and tests.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from .errors import ConfigurationError
from .metrics import MetricWindow
from .profiler import EmbeddingConfig
from .datasets import HorizonSchedule
from .models import FAMILIES
from .solver import ParamGrid, StabilizationConfig


@dataclass(frozen=True)
class EnsembleSpec:
    n_runs: int = 1000
    K: int = 200
    init_strategy: str = "random_box"


@dataclass(frozen=True)
class SplitSpec:
    random_test_fraction: float = 0.40
    center_train_fraction: float = 0.60


@dataclass(frozen=True)
class ModelEntry:
    family: str
    hyperparameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ValidationSpec:
    alpha: float = -0.1
    beta: float = 4.0
    K: int = 30
    tol: float = 1e-10
    strategies: tuple[str, ...] = ("near_root", "moderate", "random_box")


@dataclass(frozen=True)
class PipelineConfig:
    grid: ParamGrid = field(default_factory=ParamGrid)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    stabilization: StabilizationConfig = field(default_factory=StabilizationConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    smooth_window: int = 4
    metric_t_stop: int = 200
    metric_epsilon: float = 1e-8
    good_fraction: float = 0.2
    index_origin: str = "lookback"
    hist_bin_width: int = 5
    schedule: HorizonSchedule = field(default_factory=HorizonSchedule)
    splits: SplitSpec = field(default_factory=SplitSpec)
    models: tuple[ModelEntry, ...] = tuple(ModelEntry(f) for f in FAMILIES)
    heatmap_horizons: tuple[int, ...] = (1, 3, 11)
    validation: ValidationSpec = field(default_factory=ValidationSpec)
    problem_degree: int = 7
    global_seed: int = 0
    out_dir: str = "out"

    @property
    def metric_window(self) -> MetricWindow:
        return MetricWindow.for_embedding(
            self.embedding, t_stop=self.metric_t_stop, epsilon=self.metric_epsilon
        )

    @property
    def effective_grid(self) -> ParamGrid:
        """Grid with its cell seeds keyed by the pipeline's global seed."""
        return dataclasses.replace(self.grid, global_seed=self.global_seed)

    def to_dict(self) -> dict:
        return _as_jsonable(dataclasses.asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        grid = d.pop("grid", {})
        grid = ParamGrid(
            alpha_range=tuple(grid.get("alpha_range", (-3.0, 5.0))),
            beta_range=tuple(grid.get("beta_range", (-2.0, 4.0))),
            n_alpha=grid.get("n_alpha", 60),
            n_beta=grid.get("n_beta", 60),
            global_seed=grid.get("global_seed", d.get("global_seed", 0)),
        )
        models = tuple(
            ModelEntry(m["family"], dict(m.get("hyperparameters", {})))
            for m in d.pop("models", [{"family": f} for f in FAMILIES])
        )
        validation = d.pop("validation", {})
        if "strategies" in validation:
            validation["strategies"] = tuple(validation["strategies"])
        kwargs = dict(
            grid=grid,
            ensemble=EnsembleSpec(**d.pop("ensemble", {})),
            stabilization=StabilizationConfig(**d.pop("stabilization", {})),
            embedding=EmbeddingConfig(**d.pop("embedding", {})),
            schedule=HorizonSchedule(**d.pop("schedule", {})),
            splits=SplitSpec(**d.pop("splits", {})),
            models=models,
            validation=ValidationSpec(**validation),
        )
        if "heatmap_horizons" in d:
            d["heatmap_horizons"] = tuple(d["heatmap_horizons"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        kwargs.update(d)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.from_dict(json.loads(text))

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)


def _as_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _as_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_as_jsonable(v) for v in obj]
    return obj


def desk_config(global_seed: int = 0, out_dir: str = "out") -> PipelineConfig:
    """Laptop-scale preset: 20x20 grid, 64 runs, 120 iterations."""
    return PipelineConfig(
        grid=ParamGrid(n_alpha=20, n_beta=20, global_seed=global_seed),
        ensemble=EnsembleSpec(n_runs=64, K=120),
        metric_t_stop=120,
        validation=ValidationSpec(K=25),
        global_seed=global_seed,
        out_dir=out_dir,
    )


def full_config(global_seed: int = 0, out_dir: str = "out") -> PipelineConfig:
    """The full experiment protocol (heavy: ~hours of ensemble generation)."""
    return PipelineConfig(
        grid=ParamGrid(global_seed=global_seed),
        global_seed=global_seed,
        out_dir=out_dir,
    )
