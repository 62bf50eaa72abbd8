"""Pilot books, pilot assignment and MMSE channel estimation.

The pilot phase transmits sqrt(tau_p * q_k^p) psi_k per user. Each AP projects
its received L x tau_p block onto the assigned pilot and forms the linear MMSE
estimate; zeta_mk is the per-antenna second moment of the projected signal and
gamma_mk = tau_p q_k^p beta_mk^2 / zeta_mk the per-antenna estimate energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def generate_pilot_book(tau_p: int) -> np.ndarray:
    """Orthonormal pilot book: columns of the normalized DFT matrix, (tau_p, tau_p)."""
    if tau_p < 1:
        raise ValueError("tau_p must be >= 1")
    return np.fft.fft(np.eye(tau_p)) / np.sqrt(tau_p)


def assign_pilots_random(num_users: int, tau_p: int, rng: np.random.Generator) -> np.ndarray:
    """Each user draws a pilot index independently and uniformly (collisions allowed)."""
    return rng.integers(0, tau_p, size=num_users)


def assign_pilots_distinct(num_users: int, tau_p: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy collision-free assignment: a random permutation, wrapping when K > tau_p."""
    perm = rng.permutation(tau_p)
    return perm[np.arange(num_users) % tau_p]


def copilot_matrix(assignment: np.ndarray) -> np.ndarray:
    """Indicator A[k, j] = |psi_k^H psi_j|^2 for an orthonormal book: 1 iff shared pilot."""
    assignment = np.asarray(assignment)
    return (assignment[:, None] == assignment[None, :]).astype(float)


def received_pilot_matrix(g, assignment, q_pilot, book, sigma2, rng) -> np.ndarray:
    """Per-AP received pilot blocks Y_m, stacked as (M, L, tau_p).

    Y_m = sum_k sqrt(tau_p q_k^p) g_mk psi_k^H + Z_m with i.i.d. CN(0, sigma2) noise.
    """
    m, k, antennas = g.shape
    tau_p = book.shape[0]
    amp = np.sqrt(tau_p * np.asarray(q_pilot, dtype=float))        # (K,)
    psi_h = book[:, assignment].conj().T                           # (K, tau_p)
    signal = np.einsum("mkl,k,kt->mlt", g, amp, psi_h)
    noise = rng.standard_normal((m, antennas, tau_p)) + 1j * rng.standard_normal((m, antennas, tau_p))
    noise *= np.sqrt(sigma2 / 2.0)
    return signal + noise


def project_pilot(received, psi_k) -> np.ndarray:
    """Project a received block onto one pilot: y_mk = Y_m psi_k (works batched)."""
    return received @ psi_k


def zeta_matrix(beta, q_pilot, assignment, tau_p, sigma2) -> np.ndarray:
    """zeta_mk = tau_p * sum_j q_j^p beta_mj [j shares pilot k] + sigma2, shape (M, K)."""
    copilot = copilot_matrix(assignment)
    return tau_p * beta @ (copilot * np.asarray(q_pilot, dtype=float)).T + sigma2


def zeta(m, k, beta, q_pilot, assignment, tau_p, sigma2) -> float:
    """Scalar zeta_mk (see zeta_matrix)."""
    return float(zeta_matrix(beta, q_pilot, assignment, tau_p, sigma2)[m, k])


def gamma_matrix(beta, q_pilot, assignment, tau_p, sigma2) -> np.ndarray:
    """Per-antenna mean-square estimate gamma_mk = tau_p q_k^p beta_mk^2 / zeta_mk."""
    z = zeta_matrix(beta, q_pilot, assignment, tau_p, sigma2)
    return tau_p * np.asarray(q_pilot, dtype=float)[None, :] * beta**2 / z


def mmse_estimate(y_mk, beta_mk, q_k_pilot, tau_p, zeta_mk):
    """MMSE estimate of one link from its projected pilot observation.

    Returns (g_hat_mk, gamma_mk) with
    g_hat_mk = sqrt(tau_p q_k^p) beta_mk zeta_mk^{-1} y_mk.
    """
    scale = np.sqrt(tau_p * q_k_pilot) * beta_mk / zeta_mk
    gamma = tau_p * q_k_pilot * beta_mk**2 / zeta_mk
    return scale * np.asarray(y_mk), gamma


@dataclass(frozen=True)
class EstimateSet:
    """MMSE estimates for all links: g_hat (M, K, L), zeta (M, K), gamma (M, K)."""

    g_hat: np.ndarray
    zeta: np.ndarray
    gamma: np.ndarray


def estimate_channels(received, beta, q_pilot, assignment, book, tau_p, sigma2) -> EstimateSet:
    """Run the projection + MMSE stage for every AP-user pair."""
    psi = book[:, assignment]                                      # (tau_p, K)
    projected = np.einsum("mlt,tk->mkl", received, psi)
    z = zeta_matrix(beta, q_pilot, assignment, tau_p, sigma2)
    scale = np.sqrt(tau_p * np.asarray(q_pilot, dtype=float))[None, :] * beta / z
    g_hat = scale[:, :, None] * projected
    gamma = tau_p * np.asarray(q_pilot, dtype=float)[None, :] * beta**2 / z
    return EstimateSet(g_hat=g_hat, zeta=z, gamma=gamma)
