import numpy as np
import pytest

from manifold_sampler import DataMatrix, synth_circles
from manifold_sampler.manifolds import Circles, Helix, parse_reference
from manifold_sampler.sampler import (
    PipelineError,
    PipelineOptions,
    concentration_stats,
    generate,
    marginal_pdf,
    manifest,
    nearest_distances,
    silverman_1d,
)


def test_generate_shapes_and_report():
    x = synth_circles(40, seed=1)
    gen, report = generate(x, PipelineOptions(epsilon=2.0, m=3, m0=5, n_mc=2, enforce_m0_bound=False))
    assert gen.shape == (2, 80) and np.all(np.isfinite(gen))
    assert report.n_generated == 80 and report.m_selected == 3 and report.nu == 2
    d = report.to_dict()
    assert d["isde"]["m0"] == 5 and len(d["eta_cov"]) == 2


def test_m0_is_raised_to_the_decay_bound(caplog):
    x = synth_circles(40, seed=1)
    _, report = generate(x, PipelineOptions(epsilon=2.0, m=3, m0=5, n_mc=0))
    assert report.isde["m0"] > report.m0_bound
    assert "below the transient-decay bound" in caplog.text


def test_zero_realizations_gives_empty_output():
    x = synth_circles(20)
    gen, report = generate(x, PipelineOptions(epsilon=2.0, m=3, n_mc=0))
    assert gen.shape == (2, 0) and report.n_generated == 0


def test_scaled_run_returns_input_units():
    rng = np.random.default_rng(0)
    x = DataMatrix(np.vstack([rng.normal(size=60) * 1e4 + 5e4, rng.normal(size=60) * 1e-3]))
    gen, _ = generate(x, PipelineOptions(epsilon=5.0, scale=True, reduced=False, m0=3, n_mc=2, enforce_m0_bound=False))
    assert abs(np.median(gen[0]) - 5e4) < 5e3
    assert np.std(gen[1]) < 1e-2


def test_full_order_and_seed_reproducibility():
    x = synth_circles(30)
    opts = PipelineOptions(epsilon=2.0, reduced=False, m0=3, n_mc=2, seed=9, enforce_m0_bound=False)
    a, rep = generate(x, opts)
    b, _ = generate(x, opts)
    assert np.array_equal(a, b) and rep.m_selected is None


def test_failed_stage_is_named():
    x = synth_circles(20)
    with pytest.raises(PipelineError) as err:
        generate(x, PipelineOptions(epsilon=2.0, m=50))
    assert err.value.stage == "basis"


def test_manifest_records_options():
    m = manifest(PipelineOptions(epsilon=1.0), "data.csv")
    assert m["options"]["epsilon"] == 1.0 and m["source"] == "data.csv"


def test_nearest_distances_brute_force():
    rng = np.random.default_rng(0)
    p, r = rng.normal(size=(3, 30)), rng.normal(size=(3, 50))
    oracle = np.sqrt(((p[:, :, None] - r[:, None, :]) ** 2).sum(0)).min(1)
    assert np.allclose(nearest_distances(p, r, chunk=7), oracle, atol=1e-12)


def test_reference_distances():
    pts = np.array([[2.0, 0.0, 2.5], [0.0, 0.0, 0.7]])
    assert np.allclose(Circles().distance(pts), [0.0, 1.0, 0.2])
    h = Helix()
    t = np.linspace(0.3, 12.0, 20)
    on = np.vstack([np.cos(t), np.sin(t), 0.15 * t])
    assert np.max(h.distance(on)) < 1e-9
    # moving radially outward by d lands at distance d
    off = np.vstack([1.1 * np.cos(t), 1.1 * np.sin(t), 0.15 * t])
    assert np.allclose(h.distance(off), 0.1, atol=1e-3)
    assert parse_reference("helix") == Helix()


def test_concentration_stats_keys():
    x = synth_circles(40)
    s = concentration_stats(x, x.values + 0.01, Circles())
    assert s["nn_distance"]["q50"] == pytest.approx(0.01 * np.sqrt(2))
    assert {"manifold_distance_generated", "manifold_distance_given", "cov_rel_diff"} <= set(s)


def test_marginal_pdf_integrates_to_one():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(1, 500))
    t, dens = marginal_pdf(v, 0, (-6, 6, 601))
    assert np.trapezoid(dens, t) == pytest.approx(1.0, abs=1e-3)
    assert silverman_1d(np.ones(5)) > 0
    with pytest.raises(ValueError):
        marginal_pdf(v, 1, (-1, 1, 3))


def test_report_is_reproducible():
    x = synth_circles(30)
    opts = PipelineOptions(epsilon=2.0, m=3, m0=3, n_mc=2, seed=2, enforce_m0_bound=False)
    assert generate(x, opts)[1].to_dict() == generate(x, opts)[1].to_dict()


def test_noise_free_given_points_are_on_the_reference():
    x = synth_circles(40, noise_sigma=0.0)
    s = concentration_stats(x, x, Circles())
    assert s["manifold_distance_given"]["q100"] < 1e-12
    assert s["nn_distance"]["q100"] < 1e-6


def test_marginal_pdf_examples():
    from scipy.stats import norm

    draws = np.random.default_rng(2).normal(size=(1, 100_000))
    t, dens = marginal_pdf(draws, 0, (-4, 4, 161))
    assert np.max(np.abs(dens - norm.pdf(t))) <= 0.02
    t, dens = marginal_pdf(np.full((1, 5), 3.0), 0, (2, 4, 201))
    assert t[np.argmax(dens)] == pytest.approx(3.0)
    _, dens = marginal_pdf(draws, 0, (50, 60, 11))
    assert np.max(dens) < 1e-300


def test_marginals_of_reduced_circle_samples_match_the_data():
    # spec invariant: sup-norm gap <= 0.1 per component on the circles example
    x = synth_circles()
    gen, _ = generate(x, PipelineOptions(epsilon=2.7318, m=3, m0=110, n_mc=40, seed=0))
    gaps = []
    for k in range(2):
        v = np.concatenate([x.values[k], gen[k]])
        grid = (v.min() - 0.5, v.max() + 0.5, 400)
        gaps.append(np.max(np.abs(marginal_pdf(x, k, grid)[1] - marginal_pdf(gen, k, grid)[1])))
    assert max(gaps) <= 0.1, f"sup-norm gaps {np.round(gaps, 3).tolist()}"
