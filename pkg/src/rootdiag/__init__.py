"""rootdiag: early reliability diagnostics for parallel root-finding schemes.

Profiles solver contractivity over an (alpha, beta) parameter grid via a
kNN forecast-error proxy, scores each cell, and trains multi-horizon
regressors that predict the final score from short profile prefixes.
"""

from .config import PipelineConfig, desk_config, full_config
from .errors import ConfigurationError
from .pipeline import run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "PipelineConfig",
    "desk_config",
    "full_config",
    "run_pipeline",
    "__version__",
]
