import numpy as np
import pytest

from ccfsim.pilots import (
    assign_pilots_distinct,
    assign_pilots_random,
    copilot_matrix,
    estimate_channels,
    gamma_matrix,
    generate_pilot_book,
    mmse_estimate,
    project_pilot,
    received_pilot_matrix,
    zeta,
    zeta_matrix,
)


class TestPilotBook:
    def test_single_pilot(self):
        book = generate_pilot_book(1)
        assert book.shape == (1, 1)
        assert abs(abs(book[0, 0]) - 1.0) < 1e-15

    @pytest.mark.parametrize("tau_p", [2, 8, 10])
    def test_orthonormal(self, tau_p):
        book = generate_pilot_book(tau_p)
        gram = book.conj().T @ book
        assert np.max(np.abs(gram - np.eye(tau_p))) < 1e-12

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            generate_pilot_book(0)


class TestAssignment:
    def test_random_range_and_repeats_allowed(self):
        assignment = assign_pilots_random(15, 15, np.random.default_rng(0))
        assert assignment.shape == (15,)
        assert np.all((assignment >= 0) & (assignment < 15))

    def test_pigeonhole_collisions(self):
        assignment = assign_pilots_random(30, 10, np.random.default_rng(1))
        collisions = 30 - len(np.unique(assignment))
        assert collisions >= 20

    def test_deterministic(self):
        a = assign_pilots_random(12, 5, np.random.default_rng(3))
        b = assign_pilots_random(12, 5, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_distinct_mode_is_collision_free(self):
        assignment = assign_pilots_distinct(15, 15, np.random.default_rng(2))
        assert len(np.unique(assignment)) == 15

    def test_distinct_mode_wraps(self):
        assignment = assign_pilots_distinct(7, 3, np.random.default_rng(2))
        counts = np.bincount(assignment, minlength=3)
        assert counts.max() - counts.min() <= 1


def make_channel(rng, m, k, antennas, beta_scale=1.0):
    h = (rng.standard_normal((m, k, antennas)) + 1j * rng.standard_normal((m, k, antennas))) / np.sqrt(2)
    return beta_scale * h


class TestReceivedPilots:
    def test_noiseless_single_user(self):
        rng = np.random.default_rng(0)
        book = generate_pilot_book(4)
        g = make_channel(rng, 3, 1, 2)
        y = received_pilot_matrix(g, np.array([1]), np.array([1.0]), book, 0.0, rng)
        expected = 2.0 * g[:, 0, :, None] * book[:, 1].conj()[None, None, :]
        assert np.allclose(y, expected, atol=1e-14)

    def test_pure_noise_variance(self):
        rng = np.random.default_rng(1)
        book = generate_pilot_book(8)
        g = make_channel(rng, 6250, 1, 2)
        y = received_pilot_matrix(g, np.array([0]), np.array([0.0]), book, 1.0, rng)
        power = np.abs(y) ** 2
        assert power.size == 100_000
        assert power.mean() == pytest.approx(1.0, abs=0.01)

    def test_orthogonal_pilots_separate_users(self):
        rng = np.random.default_rng(2)
        book = generate_pilot_book(5)
        g = make_channel(rng, 4, 2, 3)
        assignment = np.array([0, 3])
        q = np.array([0.7, 1.3])
        y = received_pilot_matrix(g, assignment, q, book, 0.0, rng)
        recovered = project_pilot(y, book[:, 3])
        expected = np.sqrt(5 * q[1]) * g[:, 1, :]
        assert np.allclose(recovered, expected, atol=1e-12)

    def test_projection_linearity(self):
        rng = np.random.default_rng(3)
        book = generate_pilot_book(4)
        y = rng.standard_normal((5, 2, 4)) + 1j * rng.standard_normal((5, 2, 4))
        # power-of-two scale commutes with rounding, so equality is exact
        assert np.array_equal(project_pilot(4.0 * y, book[:, 2]), 4.0 * (y @ book[:, 2]))
        assert np.allclose(project_pilot(3.5 * y, book[:, 2]), 3.5 * (y @ book[:, 2]), rtol=1e-14)


class TestZeta:
    def test_single_user_arithmetic(self):
        # tau_p=10, q=0.1, beta=1, sigma2=1 -> zeta = 10*0.1*1 + 1 = 2
        beta = np.array([[1.0]])
        value = zeta(0, 0, beta, np.array([0.1]), np.array([0]), 10, 1.0)
        assert value == pytest.approx(2.0, rel=1e-15)

    def test_other_pilot_contributes_nothing(self):
        beta = np.array([[1.0, 5.0]])
        z = zeta_matrix(beta, np.array([0.1, 9.9]), np.array([0, 1]), 10, 1.0)
        assert z[0, 0] == pytest.approx(2.0, rel=1e-15)

    def test_zero_powers_leave_noise(self):
        beta = np.array([[1.0, 2.0], [3.0, 4.0]])
        z = zeta_matrix(beta, np.zeros(2), np.array([0, 0]), 8, 0.25)
        assert np.all(z == 0.25)

    def test_matches_empirical_projection_variance(self):
        # replicate one instance over many APs so each row is an i.i.d. draw
        rng = np.random.default_rng(4)
        n, k, antennas, tau_p, sigma2 = 100_000, 3, 1, 4, 0.5
        beta_row = np.array([2.0, 0.7, 1.1])
        beta = np.tile(beta_row, (n, 1))
        assignment = np.array([0, 0, 2])
        q = np.array([0.6, 0.8, 0.5])
        book = generate_pilot_book(tau_p)
        g = np.sqrt(beta)[:, :, None] * make_channel(rng, n, k, antennas)
        y = received_pilot_matrix(g, assignment, q, book, sigma2, rng)
        projected = project_pilot(y, book[:, 0])
        empirical = np.mean(np.abs(projected) ** 2)
        predicted = zeta(0, 0, beta, q, assignment, tau_p, sigma2)
        assert empirical == pytest.approx(predicted, rel=0.02)


class TestMmse:
    def test_perfect_estimation_limit(self):
        rng = np.random.default_rng(5)
        book = generate_pilot_book(3)
        beta = np.array([[1.7]])
        g = np.sqrt(beta)[:, :, None] * make_channel(rng, 1, 1, 2)
        y = received_pilot_matrix(g, np.array([1]), np.array([0.9]), book, 0.0, rng)
        est = estimate_channels(y, beta, np.array([0.9]), np.array([1]), book, 3, 0.0)
        assert np.allclose(est.g_hat, g, atol=1e-12)

    def test_zero_power_gives_zero_estimate(self):
        y_mk = np.array([1 + 2j, 3 - 1j])
        g_hat, gamma = mmse_estimate(y_mk, 1.0, 0.0, 4, 1.0)
        assert np.all(g_hat == 0) and gamma == 0.0

    def test_estimate_second_moment(self):
        # E ||g_hat||^2 = L * gamma within 1% over 1e5 i.i.d. draws
        rng = np.random.default_rng(6)
        n, antennas, tau_p, sigma2 = 100_000, 2, 4, 0.5
        beta_row = np.array([1.5, 0.6])
        beta = np.tile(beta_row, (n, 1))
        assignment = np.array([0, 0])
        q = np.array([0.4, 0.9])
        book = generate_pilot_book(tau_p)
        g = np.sqrt(beta)[:, :, None] * make_channel(rng, n, 2, antennas)
        y = received_pilot_matrix(g, assignment, q, book, sigma2, rng)
        est = estimate_channels(y, beta, q, assignment, book, tau_p, sigma2)
        energy = np.sum(np.abs(est.g_hat[:, 0, :]) ** 2, axis=1).mean()
        assert energy == pytest.approx(antennas * est.gamma[0, 0], rel=0.01)

    def test_orthogonality_principle(self):
        # E[g_hat * conj(g - g_hat)] ~ 0 componentwise within 3 standard errors
        rng = np.random.default_rng(7)
        n, antennas, tau_p, sigma2 = 100_000, 2, 4, 0.8
        beta = np.tile(np.array([1.2, 0.5]), (n, 1))
        assignment = np.array([0, 0])
        q = np.array([0.5, 0.7])
        book = generate_pilot_book(tau_p)
        g = np.sqrt(beta)[:, :, None] * make_channel(rng, n, 2, antennas)
        y = received_pilot_matrix(g, assignment, q, book, sigma2, rng)
        est = estimate_channels(y, beta, q, assignment, book, tau_p, sigma2)
        cross = est.g_hat[:, 0, :] * np.conj(g[:, 0, :] - est.g_hat[:, 0, :])
        for part in (cross.real, cross.imag):
            tol = 3.0 * part.std(axis=0) / np.sqrt(n)
            assert np.all(np.abs(part.mean(axis=0)) < tol)


class TestGamma:
    def test_gamma_bounded_by_beta(self):
        rng = np.random.default_rng(8)
        beta = 10 ** rng.uniform(-12, -8, (20, 6))
        q = rng.uniform(1e-3, 0.1, 6)
        assignment = rng.integers(0, 3, 6)
        gamma = gamma_matrix(beta, q, assignment, 3, 1e-13)
        assert np.all(gamma <= beta + 1e-25)
        assert np.all(gamma >= 0)

    def test_monotone_convergence_to_beta(self):
        # single user on an orthogonal pilot: gamma -> beta as sigma2 -> 0
        beta = np.array([[2.5]])
        q = np.array([0.3])
        assignment = np.array([0])
        previous = -np.inf
        for sigma2 in (1.0, 0.1, 0.01, 0.0):
            gamma = gamma_matrix(beta, q, assignment, 4, sigma2)[0, 0]
            assert gamma >= previous
            previous = gamma
        assert previous == pytest.approx(2.5, rel=1e-12)


def test_copilot_matrix_indicator():
    a = copilot_matrix(np.array([0, 1, 0, 2]))
    expected = np.array([
        [1, 0, 1, 0],
        [0, 1, 0, 0],
        [1, 0, 1, 0],
        [0, 0, 0, 1],
    ], dtype=float)
    assert np.array_equal(a, expected)
