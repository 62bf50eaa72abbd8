"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The first three criteria re-run the full presets (300 realizations each), so
this module takes several minutes end to end. Run it with

    pytest tests/test_acceptance.py -v -rA

to see the per-criterion report lines.
"""

import csv
import math
import time

import numpy as np
import pytest

from ccfsim.cli import main
from ccfsim.config import NetworkConfig, SolverSettings
from ccfsim.harness import experiment_presets, monte_carlo
from ccfsim.pilots import generate_pilot_book, received_pilot_matrix, estimate_channels, zeta
from ccfsim.power_control import (
    grad_lse,
    lse_objective,
    lse_of,
    sinr_jacobian,
    sinr_vector,
    wsrm_ppc,
)
from ccfsim.clustering import hierarchical_cluster
from oracles import (
    brute_force_linkage,
    finite_difference_gradient,
    finite_difference_jacobian,
    grid_search_lse_max,
    random_sinr_instance,
)


def report(num, name, ok, detail):
    print(f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


def read_samples_csv(path):
    """Samples CSV -> (label -> flat sample array, total line count)."""
    samples = {}
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    reader = csv.DictReader(line for line in lines if not line.startswith("#"))
    for row in reader:
        samples.setdefault(row["controller"], []).append(float(row["se_bits_per_hz"]))
    return {k: np.array(v) for k, v in samples.items()}, len(lines)


@pytest.fixture(scope="session")
def fig2_k15(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2_k15")
    start = time.time()
    assert main(["preset", "fig2-k15", "--out", str(out)]) == 0
    samples, line_count = read_samples_csv(out / "fig2-k15_samples.csv")
    return {"samples": samples, "lines": line_count, "seconds": time.time() - start}


@pytest.fixture(scope="session")
def fig2_k30(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2_k30")
    start = time.time()
    assert main(["preset", "fig2-k30", "--out", str(out)]) == 0
    samples, _ = read_samples_csv(out / "fig2-k30_samples.csv")
    return {"samples": samples, "seconds": time.time() - start}


@pytest.fixture(scope="session")
def fig3_medians():
    presets = experiment_presets()
    start = time.time()
    medians = {}
    for name in ("fig3a", "fig3b"):
        for spec in presets[name]:
            result = monte_carlo(spec)
            medians[(name, spec.series)] = float(np.median(result.flat(spec.series)))
    return {"medians": medians, "seconds": time.time() - start}


def test_criterion_1_fig2_controller_ordering(fig2_k15):
    med = {label: float(np.median(values)) for label, values in fig2_k15["samples"].items()}
    ordering = med["wsrm"] >= med["mse"] >= med["f"]
    margin = med["wsrm"] / med["f"] - 1.0
    detail = (
        f"median wsrm={med['wsrm']:.4f} mse={med['mse']:.4f} f={med['f']:.4f}, "
        f"wsrm/f margin={margin * 100:.2f}% (needs >=3%), {fig2_k15['seconds']:.0f}s"
    )
    report(1, "fig2 controller ordering", ordering and margin >= 0.03, detail)


def test_criterion_1_csv_row_count(fig2_k15):
    # 3 controllers x 300 realizations x 15 users + metadata + header
    expected = 3 * 300 * 15 + 2
    assert fig2_k15["lines"] == expected
    for label in ("wsrm", "mse", "f"):
        assert fig2_k15["samples"][label].size == 4500


def test_criterion_2_user_load_trend(fig2_k15, fig2_k30):
    med15 = {k: float(np.median(v)) for k, v in fig2_k15["samples"].items()}
    med30 = {k: float(np.median(v)) for k, v in fig2_k30["samples"].items()}
    drops = {k: med30[k] < med15[k] for k in ("wsrm", "mse", "f")}
    detail = ", ".join(
        f"{k}: {med15[k]:.4f}->{med30[k]:.4f}" for k in ("wsrm", "mse", "f")
    ) + f", {fig2_k30['seconds']:.0f}s"
    report(2, "fig2 user-load trend", all(drops.values()), detail)


def test_criterion_3_clustering_tradeoff(fig3_medians):
    medians = fig3_medians["medians"]
    gaps = []
    ok = True
    for name in ("fig3a", "fig3b"):
        for antennas in (1, 2, 4):
            prop = medians[(name, f"proposed-L{antennas}")]
            full = medians[(name, f"all-aps-L{antennas}")]
            gap = (prop - full) / full
            gaps.append(f"{name} L{antennas}: {gap * 100:+.1f}%")
            ok = ok and abs(prop - full) <= 0.15 * full
    report(3, "fig3 clustering trade-off", ok,
           "; ".join(gaps) + f" (|gap| <= 15%), {fig3_medians['seconds']:.0f}s")


def test_criterion_4_gradient_oracle():
    rng = np.random.default_rng(2024)
    step = 1e-6 * 0.1
    worst = 0.0
    start = time.time()
    for _ in range(100):
        ctx, q, _ = random_sinr_instance(rng, max_aps=10, max_users=5)
        lam = float(rng.uniform(0.5, 5.0))
        jac = sinr_jacobian(q, ctx)
        jac_fd = finite_difference_jacobian(lambda v: sinr_vector(v, ctx), q, step)
        rel_j = np.linalg.norm(jac - jac_fd) / max(np.linalg.norm(jac_fd), 1e-300)
        grad = grad_lse(q, ctx, lam)
        grad_fd = finite_difference_gradient(lambda v: lse_objective(v, ctx, lam), q, step)
        rel_g = np.linalg.norm(grad - grad_fd) / max(np.linalg.norm(grad_fd), 1e-300)
        worst = max(worst, rel_j, rel_g)
    report(4, "gradient finite-difference oracle", worst < 1e-5,
           f"worst relative error {worst:.2e} over 100 instances, {time.time() - start:.0f}s")


def test_criterion_5_solver_grid_oracle():
    rng = np.random.default_rng(515)
    start = time.time()
    worst_shortfall = -np.inf
    for _ in range(20):
        ctx, _, cfg = random_sinr_instance(rng, max_aps=8, max_users=3)
        settings = SolverSettings(
            epsilon=cfg.epsilon, p_max=cfg.p_max_pilot,
            smoothing_lambda=float(rng.uniform(0.5, 5.0)),
        )
        q_opt, _ = wsrm_ppc(ctx, settings)
        achieved = lse_objective(q_opt, ctx, settings.smoothing_lambda)
        grid_best = grid_search_lse_max(ctx, settings, points=50)
        worst_shortfall = max(worst_shortfall, grid_best - achieved)
    report(5, "solver vs grid-search oracle", worst_shortfall <= 1e-3,
           f"worst shortfall {worst_shortfall:.3e} (allowed 1e-3), {time.time() - start:.0f}s")


def test_criterion_6_clustering_oracle():
    rng = np.random.default_rng(66)
    start = time.time()
    mismatches = 0
    for _ in range(200):
        m = int(rng.integers(2, 13))
        d = rng.random((m, m))
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        threshold = float(rng.random())
        _, partition = hierarchical_cluster(d, threshold)
        if partition != brute_force_linkage(d, threshold):
            mismatches += 1
    report(6, "average-linkage brute-force oracle", mismatches == 0,
           f"{mismatches}/200 mismatching partitions (M <= 12), {time.time() - start:.0f}s")


def test_criterion_7_estimation_identities():
    rng = np.random.default_rng(77)
    start = time.time()
    n, antennas, tau_p, sigma2 = 100_000, 2, 4, 0.6
    beta_row = np.array([1.4, 0.5, 0.9])
    beta = np.tile(beta_row, (n, 1))
    assignment = np.array([0, 0, 2])
    q = np.array([0.5, 0.8, 0.3])
    book = generate_pilot_book(tau_p)
    h = (rng.standard_normal((n, 3, antennas)) + 1j * rng.standard_normal((n, 3, antennas))) / np.sqrt(2)
    g = np.sqrt(beta)[:, :, None] * h
    received = received_pilot_matrix(g, assignment, q, book, sigma2, rng)
    est = estimate_channels(received, beta, q, assignment, book, tau_p, sigma2)

    # MMSE orthogonality: each component of E[ghat * conj(g - ghat)] within 3 SE
    cross = est.g_hat[:, 0, :] * np.conj(g[:, 0, :] - est.g_hat[:, 0, :])
    orth_ok = True
    for part in (cross.real, cross.imag):
        tol = 3.0 * part.std(axis=0) / math.sqrt(n)
        orth_ok = orth_ok and bool(np.all(np.abs(part.mean(axis=0)) < tol))

    # second moment: E||ghat||^2 = L * gamma within 1%
    energy = np.sum(np.abs(est.g_hat[:, 0, :]) ** 2, axis=1).mean()
    second_ok = abs(energy / (antennas * est.gamma[0, 0]) - 1.0) < 0.01

    # zeta matches the empirical projected-signal variance within 2%
    projected = received @ book[:, 0]
    empirical = float(np.mean(np.abs(projected) ** 2))
    predicted = zeta(0, 0, beta, q, assignment, tau_p, sigma2)
    zeta_ok = abs(empirical / predicted - 1.0) < 0.02

    report(7, "MMSE estimation identities", orth_ok and second_ok and zeta_ok,
           f"orthogonality={orth_ok}, E|ghat|^2/(L*gamma)={energy / (antennas * est.gamma[0, 0]):.4f}, "
           f"zeta ratio={empirical / predicted:.4f}, {time.time() - start:.0f}s")


def test_criterion_8_lse_sandwich_and_prelog():
    rng = np.random.default_rng(88)
    ok = True
    for _ in range(10_000):
        values = rng.uniform(0.0, 60.0, rng.integers(1, 12))
        lam = rng.uniform(0.5, 30.0)
        x = lse_of(values, lam)
        ok = ok and (values.max() <= x + 1e-12)
        ok = ok and (x <= values.max() + math.log(len(values)) / lam + 1e-12)
    prelog_exact = (1.0 - 10 / 200) * math.log2(1.0 + 1.0) == 0.95
    report(8, "LSE sandwich and SE prelog", ok and prelog_exact,
           f"sandwich on 10^4 vectors (1e-12 slack)={ok}, SE(SINR=1, tau=10/200)==0.95 exact={prelog_exact}")


DETERMINISM_CONFIG = """
[network]
num_aps = 10
num_users = 4
tau_p = 2
area_side = 300.0

[experiment]
id = determinism
controllers = wsrm,mse,f
realizations = 6
base_seed = 5
"""


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "determinism.cfg"
    cfg.write_text(DETERMINISM_CONFIG)
    out_serial = tmp_path / "serial"
    out_parallel = tmp_path / "parallel"
    assert main(["run", "--config", str(cfg), "--out", str(out_serial), "--workers", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out_parallel), "--workers", "2"]) == 0
    identical = {}
    for name in ("determinism_samples.csv", "determinism_cdf.csv", "determinism_summary.json"):
        identical[name] = (out_serial / name).read_bytes() == (out_parallel / name).read_bytes()
    report(9, "serial vs parallel determinism", all(identical.values()),
           ", ".join(f"{k}: {'identical' if v else 'DIFFERS'}" for k, v in identical.items()))
