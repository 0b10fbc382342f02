import mpmath
import numpy as np
import pytest

from manifold_sampler.kde import KdeModel, modified_bandwidth, silverman_bandwidth
from conftest import random_eta


def test_bandwidths_by_hand():
    # nu=2, N=230: s = (4 / (230 * 4)) ** (1/6)
    s = (4.0 / 920.0) ** (1.0 / 6.0)
    assert silverman_bandwidth(2, 230) == pytest.approx(s, rel=1e-15)
    assert modified_bandwidth(2, 230) == pytest.approx(s / np.sqrt(s * s + 229.0 / 230.0), rel=1e-15)
    assert silverman_bandwidth(2, 230) == pytest.approx(0.4040, abs=1e-4)
    assert modified_bandwidth(2, 230) == pytest.approx(0.3753, abs=1e-4)


def _oracle_log_density(model, u):
    # direct sum in 50-digit arithmetic
    mpmath.mp.dps = 50
    nu, s_hat = model.nu, mpmath.mpf(model.s_hat)
    total = mpmath.mpf(0)
    for c in model.centers.T:
        d2 = sum((mpmath.mpf(float(ui)) - mpmath.mpf(float(ci))) ** 2 for ui, ci in zip(u, c))
        total += mpmath.exp(-d2 / (2 * s_hat ** 2))
    norm = (mpmath.sqrt(2 * mpmath.pi) * s_hat) ** nu * model.n_samples
    return float(mpmath.log(total / norm))


def test_log_density_matches_high_precision_oracle():
    eta = random_eta(3, 30, seed=4)
    model = KdeModel.fit(eta)
    rng = np.random.default_rng(0)
    for u in list(rng.normal(size=(5, 3))) + [np.full(3, 12.0)]:
        assert model.log_density(u) == pytest.approx(_oracle_log_density(model, u), abs=1e-11)


def test_far_tail_stays_finite():
    model = KdeModel.fit(random_eta(2, 20))
    lp = model.log_density(np.array([80.0, -60.0]))
    assert np.isfinite(lp) and lp < -1e3
    assert np.all(np.isfinite(model.potential_gradient(np.array([[80.0], [-60.0]]))))


@pytest.mark.parametrize("nu,N", [(1, 10), (3, 60)])
def test_gradient_matches_finite_differences(nu, N):
    model = KdeModel.fit(random_eta(nu, N, seed=nu))
    rng = np.random.default_rng(1)
    u = rng.normal(size=(nu, 7))
    grad = model.potential_gradient(u)
    h = 1e-6
    for k in range(nu):
        e = np.zeros((nu, 1))
        e[k] = h
        fd = (model.log_density(u + e) - model.log_density(u - e)) / (2 * h)
        assert np.max(np.abs(grad[k] - fd)) < 1e-6


def test_threaded_gradient_is_bitwise_identical():
    model = KdeModel.fit(random_eta(4, 300, seed=2))
    u = np.random.default_rng(3).normal(size=(4, 300))
    assert np.array_equal(model.potential_gradient(u), model.potential_gradient(u, workers=4, block=37))


def test_truncation_is_close_to_exact():
    eta = random_eta(2, 100, seed=5)
    u = np.random.default_rng(4).normal(size=(2, 50)) * 2
    exact = KdeModel.fit(eta).potential_gradient(u)
    trunc = KdeModel.fit(eta, truncate=True).potential_gradient(u)
    assert np.max(np.abs(exact - trunc)) < 1e-6


def test_analytic_moments_agree_with_monte_carlo():
    model = KdeModel.fit(random_eta(2, 50, seed=6))
    mean, second = model.analytic_moments()
    draws = model.sample(400_000, np.random.default_rng(7))
    assert np.max(np.abs(draws.mean(axis=1) - mean)) < 0.01
    assert np.max(np.abs(draws @ draws.T / draws.shape[1] - second)) < 0.02


def test_centers_are_shrunk():
    eta = random_eta(2, 40)
    model = KdeModel.fit(eta)
    assert np.allclose(model.centers, model.s_hat / model.s * eta.eta)


def test_bad_evaluation_shape():
    model = KdeModel.fit(random_eta(2, 10))
    with pytest.raises(ValueError):
        model.potential_gradient(np.zeros((3, 2)))


def test_reference_bandwidth_values():
    # quoted reference values; (1/230)**(1/6) = 0.403998, so only 4 decimals agree
    assert silverman_bandwidth(2, 230) == pytest.approx(0.40403, abs=1e-4)
    assert modified_bandwidth(2, 230) == pytest.approx(0.37533, abs=1e-4)
    assert 2 * np.pi * modified_bandwidth(3, 400) / 20 == pytest.approx(0.1196, abs=5e-4)
    s = [silverman_bandwidth(4, N) for N in (10, 100, 1000, 10_000)]
    assert all(a > b for a, b in zip(s, s[1:]))


def test_single_center_mode():
    model = KdeModel(nu=2, n_samples=1, s=1.0, s_hat=0.7, centers=np.zeros((2, 1)))
    assert model.log_density(np.zeros(2)) == pytest.approx(-np.log(2 * np.pi * 0.49))


def test_very_far_point():
    model = KdeModel.fit(random_eta(3, 30))
    u = np.array([600.0, 800.0, 0.0])
    assert np.isfinite(model.log_density(u))
    g = model.potential_gradient(u[:, None])
    assert np.all(np.isfinite(g))


def test_gradient_at_a_center_matches_direct_sum():
    model = KdeModel.fit(random_eta(2, 15, seed=8))
    u = model.centers[:, 4:5]
    c = model.centers
    w = np.exp(-((c - u) ** 2).sum(0) / (2 * model.s_hat ** 2))
    direct = ((c - u) * w).sum(axis=1) / (w.sum() * model.s_hat ** 2)
    assert np.allclose(model.potential_gradient(u)[:, 0], direct, atol=1e-13)


def test_second_moment_of_unnormalized_input():
    rng = np.random.default_rng(9)
    raw = rng.normal(size=(2, 80))
    raw -= raw.mean(1, keepdims=True)
    eta = np.linalg.solve(np.linalg.cholesky(np.cov(raw) / 2.0), raw)  # covariance exactly 2I
    model = KdeModel.fit(eta)
    _, second = model.analytic_moments()
    N, r = 80, model.s_hat / model.s
    assert np.allclose(second, model.s_hat ** 2 * np.eye(2) + r * r * (N - 1) / N * 2 * np.eye(2), atol=1e-12)
