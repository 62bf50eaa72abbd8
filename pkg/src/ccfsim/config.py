"""Configuration dataclasses and the key-value experiment config format.

All physical quantities are SI (meters, watts, symbols). Defaults mirror the
standard cell-free simulation setup: 50 APs on a 500 m x 500 m wrap-around
square, three-slope path loss with 8 dB log-normal shadowing beyond the far
breakpoint, 20 MHz bandwidth and 9 dB noise figure, 100 mW power budgets.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields


def thermal_noise_watts(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Receiver noise power: -174 dBm/Hz + 10*log10(B) + NF, converted to watts."""
    noise_dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** ((noise_dbm - 30.0) / 10.0)


DEFAULT_SIGMA2 = thermal_noise_watts(20e6, 9.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Static parameters of one simulated network (symbols M, K, L, tau, sigma^2)."""

    num_aps: int = 50               # M
    num_users: int = 15             # K
    antennas_per_ap: int = 1        # L
    area_side: float = 500.0        # side of the square deployment area, m
    tau_c: int = 200                # coherence block length, symbols
    tau_p: int = 10                 # pilot sequence length, symbols
    sigma2: float = DEFAULT_SIGMA2  # noise power, W
    shadowing_std_db: float = 8.0
    pathloss_d0: float = 10.0       # near breakpoint, m
    pathloss_d1: float = 50.0       # far breakpoint, m
    pathloss_const_db: float = 140.7
    p_max_pilot: float = 0.1        # W
    p_max_data: float = 0.1         # W
    epsilon: float = 1e-3           # minimum pilot power, W

    def __post_init__(self):
        if self.num_aps < 1 or self.num_users < 1 or self.antennas_per_ap < 1:
            raise ValueError("num_aps, num_users and antennas_per_ap must be >= 1")
        if not 1 <= self.tau_p <= self.tau_c:
            raise ValueError(f"need 1 <= tau_p <= tau_c, got tau_p={self.tau_p}, tau_c={self.tau_c}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if not 0 < self.epsilon <= self.p_max_pilot:
            raise ValueError(f"need 0 < epsilon <= p_max_pilot, got {self.epsilon}, {self.p_max_pilot}")
        if self.p_max_data <= 0:
            raise ValueError("p_max_data must be positive")
        if not 0 < self.pathloss_d0 < self.pathloss_d1 < self.area_side:
            raise ValueError("need 0 < d0 < d1 < area_side")
        if self.shadowing_std_db < 0:
            raise ValueError("shadowing_std_db must be >= 0")


@dataclass(frozen=True)
class ClusteringOptions:
    """How AP serving clusters are formed for each channel realization."""

    mode: str = "proposed"       # "proposed" (correlation clustering) | "all-aps"
    threshold: float = 0.7       # dendrogram cut height in [0, 1]
    linkage: str = "average"     # "average" | "single" | "complete"
    score: str = "max"           # cluster score for user k: "max" | "sum" of beta_mk

    def __post_init__(self):
        if self.mode not in ("proposed", "all-aps"):
            raise ValueError(f"unknown clustering mode {self.mode!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.linkage not in ("average", "single", "complete"):
            raise ValueError(f"unknown linkage {self.linkage!r}")
        if self.score not in ("max", "sum"):
            raise ValueError(f"unknown cluster score {self.score!r}")


@dataclass(frozen=True)
class SolverSettings:
    """Knobs of the projected gradient/conjugate-direction power solvers.

    ``kappa`` is the absolute gradient-norm stopping tolerance; ``None`` means
    1e-6 times the gradient norm at the starting point.
    """

    smoothing_lambda: float = 20.0
    kappa: float | None = None
    max_iters: int = 500
    epsilon: float = 1e-3     # lower power bound, W
    p_max: float = 0.1        # upper power bound, W

    def __post_init__(self):
        if self.smoothing_lambda <= 0:
            raise ValueError("smoothing_lambda must be positive")
        if self.kappa is not None and self.kappa <= 0:
            raise ValueError("kappa must be positive (or None for automatic)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.epsilon <= self.p_max:
            raise ValueError("need 0 < epsilon <= p_max")

    @classmethod
    def from_network(cls, network: NetworkConfig, **overrides) -> "SolverSettings":
        """Solver box bounds mirroring the network's pilot power limits."""
        kwargs = {"epsilon": network.epsilon, "p_max": network.p_max_pilot}
        kwargs.update(overrides)
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Key-value config files (INI sections mirroring the dataclasses above).
# ---------------------------------------------------------------------------

_NETWORK_KEYS = {
    "num_aps": int,
    "num_users": int,
    "antennas_per_ap": int,
    "area_side": float,
    "tau_c": int,
    "tau_p": int,
    "sigma2": float,
    "shadowing_std_db": float,
    "pathloss_d0": float,
    "pathloss_d1": float,
    "pathloss_const_db": float,
    "p_max_pilot": float,
    "p_max_data": float,
    "epsilon": float,
}

_CLUSTERING_KEYS = {
    "mode": str,
    "threshold": float,
    "linkage": str,
    "score": str,
}

_SOLVER_KEYS = {
    "smoothing_lambda": float,
    "kappa": str,    # float or "auto"
    "max_iters": int,
}

_EXPERIMENT_KEYS = {
    "id": str,
    "controllers": str,          # comma-separated subset of wsrm,mse,f
    "realizations": int,
    "base_seed": int,
    "pilot_assignment": str,     # random | distinct
    "sinr_denominator": str,     # serving | all-aps
}

_EXPERIMENT_DEFAULTS = {
    "id": "custom",
    "controllers": "wsrm,mse,f",
    "realizations": 300,
    "base_seed": 1,
    "pilot_assignment": "random",
    "sinr_denominator": "serving",
}


def _parse_section(parser, name, keyspec):
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        if key not in keyspec:
            raise ValueError(f"unknown key {key!r} in section [{name}]")
        out[key] = keyspec[key](raw)
    return out


def read_config_file(path) -> dict:
    """Parse an experiment config file into typed per-section dictionaries.

    Returns a dict with keys ``network``, ``clustering``, ``solver`` and
    ``experiment``; missing sections or keys fall back to dataclass defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, "r", encoding="utf-8") as handle:
        parser.read_file(handle)
    for section in parser.sections():
        if section not in ("network", "clustering", "solver", "experiment"):
            raise ValueError(f"unknown config section [{section}]")

    network = NetworkConfig(**_parse_section(parser, "network", _NETWORK_KEYS))
    clustering = ClusteringOptions(**_parse_section(parser, "clustering", _CLUSTERING_KEYS))

    solver_raw = _parse_section(parser, "solver", _SOLVER_KEYS)
    kappa_raw = solver_raw.pop("kappa", "auto")
    solver_kwargs = dict(solver_raw)
    if kappa_raw != "auto":
        solver_kwargs["kappa"] = float(kappa_raw)
    solver = SolverSettings.from_network(network, **solver_kwargs)

    experiment = dict(_EXPERIMENT_DEFAULTS)
    experiment.update(_parse_section(parser, "experiment", _EXPERIMENT_KEYS))
    experiment["controllers"] = tuple(
        token.strip() for token in experiment["controllers"].split(",") if token.strip()
    )
    return {
        "network": network,
        "clustering": clustering,
        "solver": solver,
        "experiment": experiment,
    }


def dump_default_config() -> str:
    """Render the fully-resolved default configuration as config-file text."""
    parser = configparser.ConfigParser()
    network = NetworkConfig()
    parser["network"] = {f.name: repr(getattr(network, f.name)) for f in fields(network)}
    clustering = ClusteringOptions()
    parser["clustering"] = {f.name: str(getattr(clustering, f.name)) for f in fields(clustering)}
    solver = SolverSettings()
    parser["solver"] = {
        "smoothing_lambda": repr(solver.smoothing_lambda),
        "kappa": "auto" if solver.kappa is None else repr(solver.kappa),
        "max_iters": str(solver.max_iters),
    }
    parser["experiment"] = {key: str(value) for key, value in _EXPERIMENT_DEFAULTS.items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()
