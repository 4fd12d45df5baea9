import math

import numpy as np
import pytest

from spad_sim.core.photon_model import (
    SensorConfig,
    detection_probability,
    expected_detections,
    fisher_information_per_frame,
    flux_from_detection_probability,
    information_shape,
    mle_flux,
    mle_flux_array,
    optimal_binary_exposure,
    optimal_lambda,
    poisson_pmf,
)
from spad_sim.errors import DomainError


def test_poisson_pmf_values():
    assert poisson_pmf(0, 0.0) == 1.0
    assert poisson_pmf(0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert poisson_pmf(3, 0.0) == 0.0


def test_poisson_pmf_normalization_and_mean():
    assert sum(poisson_pmf(k, 5.0) for k in range(201)) == pytest.approx(1.0, abs=1e-12)
    for lam in (0.5, 3.0, 12.0, 20.0):
        mean = sum(k * poisson_pmf(k, lam) for k in range(201))
        assert mean == pytest.approx(lam, abs=1e-9)


def test_poisson_pmf_large_k_does_not_overflow():
    assert 0.0 < poisson_pmf(1000, 1000.0) < 1.0


def test_poisson_pmf_rejects_bad_arguments():
    with pytest.raises(DomainError):
        poisson_pmf(-1, 1.0)
    with pytest.raises(DomainError):
        poisson_pmf(1, -0.5)


def test_sensor_config_validation():
    with pytest.raises(DomainError):
        SensorConfig(eta=0.0)
    with pytest.raises(DomainError):
        SensorConfig(eta=1.5)
    with pytest.raises(DomainError):
        SensorConfig(dark_rate=-1.0)
    with pytest.raises(DomainError):
        SensorConfig(tau_bin=0.0)
    with pytest.raises(DomainError):
        SensorConfig(width=0)


def test_sensor_config_dict_round_trip():
    cfg = SensorConfig(eta=0.3, dark_rate=25.0, tau_bin=5e-6, width=10, height=7)
    assert SensorConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.with_changes(tau_bin=1e-3).tau_bin == 1e-3


def test_expected_detections_examples():
    dark = expected_detections(0.0, SensorConfig(dark_rate=0.0))
    assert dark.lam == 0.0
    assert dark.p_detect == 0.0

    stats = expected_detections(1e5, SensorConfig(eta=0.5, dark_rate=100.0, tau_bin=1e-5))
    assert stats.lam == pytest.approx(0.501, rel=1e-12)
    assert stats.p_detect == pytest.approx(1.0 - math.exp(-0.501), rel=1e-12)


def test_detection_probability_at_ln2_is_half(unit_sensor):
    assert detection_probability(math.log(2.0), unit_sensor) == pytest.approx(0.5, rel=1e-15)


def test_expected_detections_rejects_negative_flux():
    with pytest.raises(DomainError):
        expected_detections(-1.0, SensorConfig())


def test_detection_probability_increases_with_flux_and_exposure():
    cfg = SensorConfig()
    phi = np.logspace(0, 7, 50)
    p = detection_probability(phi, cfg)
    assert np.all(np.diff(p) > 0)

    taus = np.logspace(-7, -3, 20)
    p_tau = [detection_probability(1e4, cfg, tau_bin=t) for t in taus]
    assert np.all(np.diff(p_tau) > 0)


def test_mle_flux_examples(unit_sensor):
    empty = mle_flux(0, 1000, SensorConfig())
    assert empty.phi_hat == 0.0
    assert not empty.saturated

    est = mle_flux(632, 1000, unit_sensor)
    assert est.phi_hat == pytest.approx(-math.log(0.368), rel=1e-12)
    assert est.phi_hat == pytest.approx(0.9997, abs=1e-4)
    assert est.ci_low <= est.phi_hat <= est.ci_high

    full = mle_flux(1000, 1000, unit_sensor)
    assert full.saturated
    assert full.phi_hat == pytest.approx(-math.log(1.0 / 1000.0), rel=1e-12)
    assert math.isinf(full.ci_high)


def test_mle_flux_rejects_bad_counts(unit_sensor):
    with pytest.raises(DomainError):
        mle_flux(11, 10, unit_sensor)
    with pytest.raises(DomainError):
        mle_flux(0, 0, unit_sensor)


def test_mle_round_trip_through_detection_probability():
    cfg = SensorConfig(eta=0.5, dark_rate=100.0, tau_bin=1e-5)
    phi = np.array([1e3, 1e4, 1e5, 1e6])
    recovered = flux_from_detection_probability(detection_probability(phi, cfg), cfg)
    np.testing.assert_allclose(recovered, phi, rtol=1e-9)


def test_dark_counts_are_subtracted():
    cfg = SensorConfig(eta=0.5, dark_rate=1e5, tau_bin=1e-5)
    p_dark = detection_probability(0.0, cfg)
    assert flux_from_detection_probability(p_dark, cfg) == pytest.approx(0.0, abs=1e-6)


def test_wilson_interval_coverage(rng):
    cfg = SensorConfig(eta=1.0, dark_rate=0.0, tau_bin=1.0)
    n = rng.binomial(1000, 1.0 - math.exp(-1.0), size=10_000)
    est = mle_flux_array(n, 1000, cfg)
    coverage = np.mean((est.ci_low <= 1.0) & (1.0 <= est.ci_high))
    assert 0.935 <= coverage <= 0.965


def test_fisher_information_examples():
    cfg = SensorConfig(eta=1.0, dark_rate=0.0, tau_bin=1.0)
    assert fisher_information_per_frame(math.log(2.0), cfg) == pytest.approx(1.0, rel=1e-12)
    assert math.isinf(fisher_information_per_frame(0.0, cfg))

    grid = np.linspace(2.0, 10.0, 200)
    assert np.all(np.diff(fisher_information_per_frame(grid, cfg)) < 0)


def test_fisher_information_symmetry_under_eta_tau_exchange():
    a = SensorConfig(eta=0.25, dark_rate=0.0, tau_bin=4e-5)
    b = SensorConfig(eta=0.5, dark_rate=0.0, tau_bin=2e-5)
    assert fisher_information_per_frame(3e4, a) == pytest.approx(fisher_information_per_frame(3e4, b), rel=1e-12)


def test_fisher_information_matches_finite_differences():
    cfg = SensorConfig(eta=1.0, dark_rate=0.0, tau_bin=1.0)
    for lam in np.linspace(0.01, 8.0, 40):
        h = lam * 1e-5
        dp = (detection_probability(lam + h, cfg) - detection_probability(lam - h, cfg)) / (2 * h)
        p = detection_probability(lam, cfg)
        expected = dp * dp / (p * (1.0 - p))
        assert fisher_information_per_frame(lam, cfg) == pytest.approx(expected, rel=1e-6)


def test_optimal_lambda_matches_grid_argmax():
    grid = np.linspace(0.1, 10.0, 1_000_000)
    best = grid[np.argmax(information_shape(grid))]
    assert optimal_lambda() == pytest.approx(best, abs=1e-4)
    assert optimal_lambda() == pytest.approx(1.594, abs=1e-3)
    assert 1.0 - math.exp(-optimal_lambda()) == pytest.approx(0.797, abs=1e-3)


def test_optimal_binary_exposure_scaling():
    cfg = SensorConfig(eta=0.5, dark_rate=0.0, tau_bin=1e-5)
    tau = optimal_binary_exposure(1e5, cfg)
    assert tau == pytest.approx(optimal_lambda() / (1e5 * 0.5), rel=1e-12)
    assert optimal_binary_exposure(2e5, cfg) == pytest.approx(tau / 2, rel=1e-12)


def test_optimal_binary_exposure_dark_dominated():
    cfg = SensorConfig(eta=0.5, dark_rate=1e6, tau_bin=1e-5)
    assert optimal_binary_exposure(1.0, cfg) == pytest.approx(optimal_lambda() / 1e6, rel=1e-6)


def test_optimal_binary_exposure_needs_a_rate():
    with pytest.raises(DomainError):
        optimal_binary_exposure(0.0, SensorConfig(dark_rate=0.0))
