"""Uplink SINR/SE evaluation and pilot power controllers.

The use-and-then-forget SINR of user k under MRC combining is

    SINR_k = No_k / De_k,
    No_k = L tau_p q_k^d q_k^p sum_{m in C_k} beta_mk^2 / zeta_mk,
    De_k = sum_m [ L tau_p / zeta_mk * sum_{j != k, co-pilot} q_j^d q_j^p beta_mj^2
                   + sum_j q_j^d beta_mj + sigma2 ],

with zeta_mk the projected-pilot second moment and the denominator summed
over the serving set C_k (default) or over all APs. Only users sharing
user k's pilot contribute to the contamination term, mirroring the MMSE
estimation model.

The weighted sum-rate controller ascends the log-sum-exp smoothing of
max_k SINR_k with projected conjugate directions (Polak-Ribiere update,
trial step -z.d/d.d, backtracking until the projected step improves the
objective). The MSE controller instead minimizes the aggregate channel
estimation error sum (beta_mk - gamma_mk) over served pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SolverSettings
from .pilots import copilot_matrix, zeta_matrix

_TINY = 1e-300


class SolverError(RuntimeError):
    """Raised when a power solver encounters a non-finite objective or gradient."""


@dataclass(frozen=True)
class SinrContext:
    """Everything the SINR evaluation needs besides the pilot powers."""

    beta: np.ndarray          # (M, K) large-scale gains
    assoc: np.ndarray         # (M, K) binary association matrix
    assignment: np.ndarray    # (K,) pilot index per user
    q_data: np.ndarray        # (K,) data powers, W
    tau_p: int
    tau_c: int
    antennas: int             # L
    sigma2: float
    denominator: str = "serving"   # "serving" | "all-aps"

    def __post_init__(self):
        m, k = self.beta.shape
        if self.assoc.shape != (m, k):
            raise ValueError("assoc shape must match beta")
        if self.assignment.shape != (k,) or self.q_data.shape != (k,):
            raise ValueError("assignment and q_data must have one entry per user")
        if self.denominator not in ("serving", "all-aps"):
            raise ValueError(f"unknown denominator mode {self.denominator!r}")
        if (self.assoc.sum(axis=0) == 0).any():
            raise ValueError("every user needs a non-empty serving set")

    @property
    def num_users(self) -> int:
        return self.beta.shape[1]

    def copilot(self) -> np.ndarray:
        return copilot_matrix(self.assignment)

    def denominator_mask(self) -> np.ndarray:
        if self.denominator == "serving":
            return self.assoc
        return np.ones_like(self.assoc)


def _sinr_terms(q_pilot, ctx):
    """Shared intermediates: returns (No, De, Z, T1) vectors/matrices."""
    q_pilot = np.asarray(q_pilot, dtype=float)
    a = ctx.copilot()
    z = zeta_matrix(ctx.beta, q_pilot, ctx.assignment, ctx.tau_p, ctx.sigma2)
    beta_sq = ctx.beta**2
    num_sum = ((beta_sq / z) * ctx.assoc).sum(axis=0)                        # (K,)
    no = ctx.antennas * ctx.tau_p * ctx.q_data * q_pilot * num_sum
    w = a * (ctx.q_data * q_pilot)[None, :]
    np.fill_diagonal(w, 0.0)
    t1 = beta_sq @ w.T                                                       # (M, K)
    data_interf = ctx.beta @ ctx.q_data                                      # (M,)
    mask = ctx.denominator_mask()
    de = (mask * (ctx.antennas * ctx.tau_p * t1 / z + data_interf[:, None] + ctx.sigma2)).sum(axis=0)
    return no, de, z, t1


def sinr_vector(q_pilot, ctx: SinrContext) -> np.ndarray:
    """SINR of every user for the given pilot powers, shape (K,)."""
    no, de, _, _ = _sinr_terms(q_pilot, ctx)
    return no / de


def sinr(k: int, q_pilot, ctx: SinrContext) -> float:
    """SINR of user k."""
    return float(sinr_vector(q_pilot, ctx)[k])


def se_vector(q_pilot, ctx: SinrContext) -> np.ndarray:
    """Spectral efficiency (1 - tau_p/tau_c) log2(1 + SINR_k) for every user."""
    prelog = 1.0 - ctx.tau_p / ctx.tau_c
    return prelog * np.log2(1.0 + sinr_vector(q_pilot, ctx))


def spectral_efficiency(k: int, q_pilot, ctx: SinrContext) -> float:
    """Spectral efficiency of user k in bits/s/Hz."""
    return float(se_vector(q_pilot, ctx)[k])


def lse_objective(q_pilot, ctx: SinrContext, smoothing_lambda: float) -> float:
    """Smooth maximum X = (1/lambda) log sum_k exp(lambda SINR_k), overflow-safe."""
    return lse_of(sinr_vector(q_pilot, ctx), smoothing_lambda)


def lse_of(values, smoothing_lambda: float) -> float:
    """Log-sum-exp smooth maximum of a plain vector (max-shifted)."""
    scaled = smoothing_lambda * np.asarray(values, dtype=float)
    shift = scaled.max()
    return float((shift + np.log(np.exp(scaled - shift).sum())) / smoothing_lambda)


def sinr_jacobian(q_pilot, ctx: SinrContext) -> np.ndarray:
    """J[k, i] = d SINR_k / d q_i^p, including all zeta^{-1} chain-rule terms."""
    q_pilot = np.asarray(q_pilot, dtype=float)
    a = ctx.copilot()
    no, de, z, t1 = _sinr_terms(q_pilot, ctx)
    beta = ctx.beta
    beta_sq = beta**2
    l_tau = ctx.antennas * ctx.tau_p

    num_sum = ((beta_sq / z) * ctx.assoc).sum(axis=0)
    s2 = ((ctx.assoc * beta_sq / z**2).T @ beta)                 # (K, K): sum_m B beta_mk^2 beta_mi / z^2
    d_no = -l_tau * ctx.tau_p * (ctx.q_data * q_pilot)[:, None] * a * s2
    d_no[np.diag_indices_from(d_no)] += l_tau * ctx.q_data * num_sum

    mask = ctx.denominator_mask()
    s3 = ((mask / z).T @ beta_sq)                                # (K, K): sum_m Bd beta_mi^2 / z
    s4 = ((mask * t1 / z**2).T @ beta)                           # (K, K): sum_m Bd T1 beta_mi / z^2
    a_off = a.copy()
    np.fill_diagonal(a_off, 0.0)
    d_de = l_tau * (ctx.q_data[None, :] * a_off * s3 - ctx.tau_p * a * s4)

    return (de[:, None] * d_no - no[:, None] * d_de) / de[:, None] ** 2


def grad_sinr(k: int, q_pilot, ctx: SinrContext) -> np.ndarray:
    """Gradient of SINR_k with respect to all pilot powers, shape (K,)."""
    return sinr_jacobian(q_pilot, ctx)[k]


def softmax_weights(values, smoothing_lambda: float) -> np.ndarray:
    scaled = smoothing_lambda * np.asarray(values, dtype=float)
    shifted = np.exp(scaled - scaled.max())
    return shifted / shifted.sum()


def grad_lse(q_pilot, ctx: SinrContext, smoothing_lambda: float) -> np.ndarray:
    """Gradient of the smooth maximum: softmax-weighted combination of SINR gradients."""
    s = sinr_vector(q_pilot, ctx)
    weights = softmax_weights(s, smoothing_lambda)
    return sinr_jacobian(q_pilot, ctx).T @ weights


@dataclass
class SolverTrace:
    """Accepted iterates of a solver run: (pilot powers, objective, gradient norm)."""

    iterates: list = field(default_factory=list)

    def append(self, q_pilot, objective, grad_norm):
        self.iterates.append((np.array(q_pilot), float(objective), float(grad_norm)))

    @property
    def objectives(self):
        return [obj for _, obj, _ in self.iterates]

    @property
    def grad_norms(self):
        return [gn for _, _, gn in self.iterates]

    def __len__(self):
        return len(self.iterates)


def _check_finite(label, *values):
    for value in values:
        if not np.all(np.isfinite(value)):
            raise SolverError(f"{label} became non-finite")


def _projected_ascent(value_fn, grad_fn, q_init, settings: SolverSettings, conjugate: bool,
                      step_rule: str = "algorithm1"):
    """Maximize value_fn over the box [epsilon, p_max]^K.

    Conjugate mode follows the gradient-descent-style recursion: trial step
    alpha = -z.d / d.d with z = -gradient, Polak-Ribiere direction update,
    falling back to steepest ascent (and then halting) whenever the projected
    trial step cannot improve the objective. The "box-span" step rule instead
    opens each line search at a step crossing the whole box, which suits
    objectives whose gradient scale is far from the power scale.
    """
    lo, hi = settings.epsilon, settings.p_max
    q = np.clip(np.asarray(q_init, dtype=float), lo, hi)
    f = value_fn(q)
    g = grad_fn(q)
    _check_finite("objective", f)
    _check_finite("gradient", g)
    grad_norm = float(np.linalg.norm(g))
    tol = settings.kappa if settings.kappa is not None else 1e-6 * grad_norm
    trace = SolverTrace()
    trace.append(q, f, grad_norm)
    direction = g.copy()

    for _ in range(settings.max_iters):
        if grad_norm <= tol:
            break
        moved = False
        candidates = (direction, g) if conjugate else (g,)
        for cand in candidates:
            slope = float(cand @ g)
            if not np.isfinite(slope) or slope <= 0.0:
                continue
            if step_rule == "algorithm1":
                alpha = slope / max(float(cand @ cand), _TINY)
            else:
                alpha = (hi - lo) / max(float(np.abs(cand).max()), _TINY)
            for _ in range(60):
                q_new = np.clip(q + alpha * cand, lo, hi)
                if np.array_equal(q_new, q):
                    break                      # projection absorbed the whole step
                f_new = value_fn(q_new)
                _check_finite("objective", f_new)
                if f_new > f:
                    moved = True
                    break
                alpha *= 0.5
            if moved:
                used = cand
                break
        if not moved:
            break                              # stationary on the box face reached
        g_new = grad_fn(q_new)
        _check_finite("gradient", g_new)
        if conjugate:
            # z = -gradient; Polak-Ribiere factor z_new.(z_new - z)/|z|^2
            pr = float(g_new @ (g_new - g)) / max(float(g @ g), _TINY)
            direction = g_new + pr * used
        q, f, g = q_new, f_new, g_new
        grad_norm = float(np.linalg.norm(g))
        trace.append(q, f, grad_norm)
    return q, trace


# Bound on the "gradient ascent, then extreme-point coordinate sweep" rounds
# of the WSRM solver; in practice the sweep stops changing after 1-2 rounds.
_MAX_SWEEP_ROUNDS = 20


def _extreme_coordinate_sweep(value_fn, q, f, lo, hi):
    """Greedy pass trying each user's power at the box edges.

    Escapes the single-coordinate barriers of the smoothed max-SINR landscape
    (cutting a contaminator's pilot power to the floor first hurts, then pays
    off) that plain ascent cannot cross. Only strict improvements are kept.
    """
    q = q.copy()
    improved = False
    for i in range(len(q)):
        for candidate in (lo, hi):
            if q[i] == candidate:
                continue
            trial = q.copy()
            trial[i] = candidate
            f_trial = value_fn(trial)
            _check_finite("objective", f_trial)
            if f_trial > f:
                q, f = trial, f_trial
                improved = True
    return q, f, improved


def wsrm_ppc(ctx: SinrContext, settings: SolverSettings, q_init=None):
    """Weighted sum-rate pilot power control via LSE-smoothed SINR maximization.

    Projected conjugate-direction ascent interleaved with extreme-point
    coordinate sweeps until neither makes progress. Returns (pilot powers,
    SolverTrace); starts from full power unless an initial point is supplied,
    and the result never degrades the objective.
    """
    if q_init is None:
        q_init = np.full(ctx.num_users, settings.p_max)
    lam = settings.smoothing_lambda
    value_fn = lambda q: lse_objective(q, ctx, lam)
    grad_fn = lambda q: grad_lse(q, ctx, lam)

    q, trace = _projected_ascent(value_fn, grad_fn, q_init, settings, conjugate=True)
    entry_grad_norm = trace.iterates[0][2]
    tol = settings.kappa if settings.kappa is not None else 1e-6 * entry_grad_norm
    if entry_grad_norm <= tol:
        return q, trace         # converged at entry; nothing to refine
    f = trace.iterates[-1][1]
    for _ in range(_MAX_SWEEP_ROUNDS):
        q_swept, f_swept, improved = _extreme_coordinate_sweep(
            value_fn, q, f, settings.epsilon, settings.p_max
        )
        if not improved:
            break
        q, continued = _projected_ascent(value_fn, grad_fn, q_swept, settings, conjugate=True)
        trace.iterates.extend(continued.iterates)
        f = trace.iterates[-1][1]
    return q, trace


def f_ppc(ctx: SinrContext, settings: SolverSettings) -> np.ndarray:
    """Full pilot power baseline: every user transmits pilots at p_max."""
    return np.full(ctx.num_users, settings.p_max)


def estimation_error(q_pilot, ctx: SinrContext) -> float:
    """Aggregate channel estimation error sum_{served m,k} (beta_mk - gamma_mk)."""
    q_pilot = np.asarray(q_pilot, dtype=float)
    z = zeta_matrix(ctx.beta, q_pilot, ctx.assignment, ctx.tau_p, ctx.sigma2)
    gamma = ctx.tau_p * q_pilot[None, :] * ctx.beta**2 / z
    return float((ctx.assoc * (ctx.beta - gamma)).sum())


def estimation_error_gradient(q_pilot, ctx: SinrContext) -> np.ndarray:
    """Analytic gradient of estimation_error with respect to the pilot powers."""
    q_pilot = np.asarray(q_pilot, dtype=float)
    a = ctx.copilot()
    z = zeta_matrix(ctx.beta, q_pilot, ctx.assignment, ctx.tau_p, ctx.sigma2)
    beta_sq = ctx.beta**2
    own = (ctx.assoc * beta_sq / z).sum(axis=0)                              # (K,)
    cross = ((ctx.assoc * beta_sq * q_pilot[None, :] / z**2).T @ ctx.beta)   # (K, K)
    d_gamma = ctx.tau_p * own - ctx.tau_p**2 * (a * cross).sum(axis=0)
    return -d_gamma


def mse_ppc(ctx: SinrContext, settings: SolverSettings) -> np.ndarray:
    """Estimation-error-minimizing pilot powers (projected gradient descent)."""
    q_init = np.full(ctx.num_users, settings.p_max)
    q_opt, _ = _projected_ascent(
        lambda q: -estimation_error(q, ctx),
        lambda q: -estimation_error_gradient(q, ctx),
        q_init,
        settings,
        conjugate=False,
        step_rule="box-span",
    )
    return q_opt


CONTROLLERS = ("wsrm", "mse", "f")


def solve_controller(name: str, ctx: SinrContext, settings: SolverSettings):
    """Dispatch a controller by name; returns (pilot powers, trace-or-None)."""
    if name == "wsrm":
        return wsrm_ppc(ctx, settings)
    if name == "mse":
        return mse_ppc(ctx, settings), None
    if name == "f":
        return f_ppc(ctx, settings), None
    raise ValueError(f"unknown controller {name!r}")
