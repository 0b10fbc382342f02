import numpy as np
import pytest

from manifold_sampler import DataMatrix, build_basis, fit_pca, normalize, synth_circles
from manifold_sampler.reduction import e_red, reduced_reconstruction, select_m, spectral_gap, sweep_schedule


def _small(seed=0, N=15):
    rng = np.random.default_rng(seed)
    x = DataMatrix(rng.normal(size=(3, N)) * [[1.0], [2.0], [0.5]])
    pca = fit_pca(x)
    return x, pca, normalize(x, pca)


def test_full_basis_reconstructs_exactly():
    x, pca, eta = _small()
    basis = build_basis(eta, 0.05, m=eta.N)
    assert np.allclose(reduced_reconstruction(pca, eta, basis), x.values, atol=1e-10)
    assert e_red(x, pca, eta, basis) <= 1e-10


def test_e_red_by_hand_for_constant_basis():
    # with m=1 the only basis vector is constant, so the reconstruction is the mean
    x, pca, eta = _small(1)
    basis = build_basis(eta, 1.0, m=2).truncated(1)
    assert e_red(x, pca, eta, basis) == pytest.approx(1.0, abs=1e-10)


def test_sweep_schedule():
    assert sweep_schedule(5, 100) == [2, 3, 4, 5]
    s = sweep_schedule(47, 100)
    assert s[:29] == list(range(2, 31)) and s[29:] == [35, 40, 45, 47]
    assert sweep_schedule(500, 40)[-1] == 40


def test_spectral_gap():
    lam = np.array([1.0, 0.5, 0.4, 0.001, 0.0009])
    assert spectral_gap(lam) == 3


def test_select_m_on_circles():
    x = synth_circles()
    pca = fit_pca(x)
    eta = normalize(x, pca)
    diag = select_m(x, pca, eta, 2.7318, tol=5e-3, m_max=20)
    assert diag.m_selected == 3
    assert diag.gap_m == 3
    assert diag.e_red[diag.m_values.index(3)] <= 5e-3
    assert set(diag.to_dict()) >= {"m_values", "e_red", "m_selected", "gap_m", "eigenvalues"}


def test_select_m_caps_at_vanishing_eigenvalues(caplog):
    x, pca, eta = _small(2, N=40)
    diag = select_m(x, pca, eta, 50.0, tol=1e-3, m_max=40)
    assert max(diag.m_values) < 40
    assert "capped" in caplog.text


def test_select_m_validates():
    x, pca, eta = _small()
    with pytest.raises(ValueError):
        select_m(x, pca, eta, 1.0, tol=0.0)
    with pytest.raises(ValueError):
        select_m(x, pca, eta, 1.0, m_max=100)


def test_boundary_m_two_is_allowed():
    # a line in the plane: the first non-constant vector already reconstructs it
    t = np.linspace(0, 1, 30)
    x = DataMatrix(np.vstack([t, 2 * t + 1]) + 1e-9 * np.random.default_rng(0).normal(size=(2, 30)))
    pca = fit_pca(x)
    eta = normalize(x, pca)
    diag = select_m(x, pca, eta, 50.0, tol=0.5, m_max=10)
    assert diag.m_selected == 2
