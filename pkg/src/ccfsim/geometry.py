"""Network geometry, large-scale fading and Rayleigh channel draws.

Large-scale gain between AP m and user k is beta_mk = 10^((PL + S)/10) with a
three-slope path loss PL(d) and log-normal shadowing S applied beyond the far
breakpoint. The per-link channel is g_mk = sqrt(beta_mk) * h_mk with h_mk an
i.i.d. circularly-symmetric complex Gaussian L-vector of unit entry variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig

# Distances are floored before the path-loss evaluation so a user dropped on
# top of an AP does not produce a singular gain.
DISTANCE_FLOOR_M = 1.0


@dataclass(frozen=True)
class Layout:
    """AP and user coordinates, shape (M, 2) and (K, 2) in meters."""

    ap_positions: np.ndarray
    user_positions: np.ndarray


def place_entities(config: NetworkConfig, rng: np.random.Generator) -> Layout:
    """Drop M APs and K users independently and uniformly on the square."""
    ap = rng.uniform(0.0, config.area_side, size=(config.num_aps, 2))
    ue = rng.uniform(0.0, config.area_side, size=(config.num_users, 2))
    return Layout(ap_positions=ap, user_positions=ue)


def wraparound_distance(a, b, side: float) -> float:
    """Torus (wrap-around) distance between two points on the [0, side)^2 square."""
    delta = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    delta = np.minimum(delta, side - delta)
    return float(np.hypot(delta[0], delta[1]))


def pairwise_wraparound_distances(ap_positions, user_positions, side: float) -> np.ndarray:
    """All AP-user torus distances as an (M, K) matrix."""
    delta = np.abs(ap_positions[:, None, :] - user_positions[None, :, :])
    delta = np.minimum(delta, side - delta)
    return np.hypot(delta[..., 0], delta[..., 1])


def path_loss_db(d, d0: float, d1: float, const_db: float):
    """Three-slope path loss in dB; scalar or array ``d`` in meters.

    Constant below d0, 20 dB/decade between d0 and d1, 35 dB/decade beyond d1,
    continuous at both breakpoints. Distances are clamped to a 1 m floor.
    """
    d = np.maximum(np.asarray(d, dtype=float), DISTANCE_FLOOR_M)
    near = -const_db - 15.0 * np.log10(d1 / 1000.0) - 20.0 * np.log10(d0 / 1000.0)
    mid = -const_db - 15.0 * np.log10(d1 / 1000.0) - 20.0 * np.log10(d / 1000.0)
    far = -const_db - 35.0 * np.log10(d / 1000.0)
    out = np.where(d <= d0, near, np.where(d <= d1, mid, far))
    if out.ndim == 0:
        return float(out)
    return out


def large_scale_coefficient(d, shadow_db, d0: float, d1: float, const_db: float):
    """Linear large-scale gain 10^((PL + S)/10).

    Shadowing is only applied beyond the far breakpoint d1; closer links are
    deterministic, matching the three-slope model's usage.
    """
    d = np.asarray(d, dtype=float)
    shadow = np.where(d > d1, np.asarray(shadow_db, dtype=float), 0.0)
    beta = 10.0 ** ((path_loss_db(d, d0, d1, const_db) + shadow) / 10.0)
    if beta.ndim == 0:
        return float(beta)
    return beta


def large_scale_matrix(layout: Layout, config: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """beta_mk for all AP-user pairs, shape (M, K), linear scale.

    The shadowing draw always consumes M*K Gaussians so the random stream
    stays aligned regardless of how many links fall beyond d1.
    """
    d = pairwise_wraparound_distances(layout.ap_positions, layout.user_positions, config.area_side)
    shadow_db = rng.normal(0.0, config.shadowing_std_db, size=d.shape)
    return large_scale_coefficient(
        d, shadow_db, config.pathloss_d0, config.pathloss_d1, config.pathloss_const_db
    )


def draw_channel(beta: np.ndarray, antennas: int, rng: np.random.Generator) -> np.ndarray:
    """One small-scale realization g_mk = sqrt(beta_mk) h_mk, shape (M, K, L).

    h entries are CN(0, 1): real and imaginary parts N(0, 1/2).
    """
    m, k = beta.shape
    h = rng.standard_normal((m, k, antennas)) + 1j * rng.standard_normal((m, k, antennas))
    h *= np.sqrt(0.5)
    return np.sqrt(beta)[:, :, None] * h
