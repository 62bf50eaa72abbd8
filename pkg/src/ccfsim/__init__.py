"""Uplink clustered cell-free massive MIMO Monte Carlo simulator."""

from .config import ClusteringOptions, NetworkConfig, SolverSettings
from .geometry import Layout, draw_channel, large_scale_matrix, place_entities
from .harness import ExperimentSpec, SeSampleSet, cdf, experiment_presets, monte_carlo
from .power_control import SinrContext, f_ppc, mse_ppc, se_vector, sinr_vector, wsrm_ppc

__version__ = "0.1.0"

__all__ = [
    "ClusteringOptions",
    "ExperimentSpec",
    "Layout",
    "NetworkConfig",
    "SeSampleSet",
    "SinrContext",
    "SolverSettings",
    "cdf",
    "draw_channel",
    "experiment_presets",
    "f_ppc",
    "large_scale_matrix",
    "monte_carlo",
    "mse_ppc",
    "place_entities",
    "se_vector",
    "sinr_vector",
    "wsrm_ppc",
    "__version__",
]
