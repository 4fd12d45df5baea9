import math

import numpy as np
import pytest

from spad_sim.core.bitstream import CountImage
from spad_sim.core.photon_model import SensorConfig, flux_from_detection_probability, optimal_lambda
from spad_sim.core.reconstruction import estimate_flux_image, recommend_binary_exposure
from spad_sim.core.simulator import FluxMap, simulate_counts
from spad_sim.errors import DimensionMismatchError, DomainError


def _counts(values, n_frames):
    return CountImage(np.asarray(values, dtype=np.uint32), n_frames)


def test_estimate_examples(unit_sensor):
    cfg = unit_sensor.with_changes(width=3, height=1)
    image = estimate_flux_image(_counts([[0, 50, 100]], 100), cfg)
    np.testing.assert_allclose(image.flux.flux[0], [0.0, math.log(2.0), math.log(100.0)], rtol=1e-12)
    np.testing.assert_array_equal(image.saturated_mask, [[False, False, True]])
    assert image.estimate.ci_high[0, 2] == math.inf
    assert image.saturated_fraction == pytest.approx(1 / 3)


def test_estimate_rejects_wrong_geometry(unit_sensor):
    with pytest.raises(DimensionMismatchError):
        estimate_flux_image(_counts(np.zeros((4, 4)), 10), unit_sensor)


def test_estimates_tighten_with_more_frames():
    cfg = SensorConfig(eta=0.5, dark_rate=0.0, tau_bin=1e-5, width=32, height=32)
    truth = 2e5
    flux = FluxMap(np.full(cfg.shape, truth))
    errors = []
    for n_frames in (100, 1_000, 10_000, 100_000):
        est = estimate_flux_image(simulate_counts(flux, cfg, n_frames, seed=n_frames), cfg)
        errors.append(float(np.sqrt(np.mean((est.flux.flux - truth) ** 2))) / truth)
    assert errors == sorted(errors, reverse=True)
    assert errors[-1] < 0.01


def test_dark_only_pixels_are_consistent_with_zero_flux():
    cfg = SensorConfig(eta=0.5, dark_rate=100.0, tau_bin=1e-2, width=32, height=32)
    ci = simulate_counts(FluxMap(np.zeros(cfg.shape)), cfg, 100_000, seed=8)
    image = estimate_flux_image(ci, cfg)

    assert np.all(image.flux.flux >= 0)
    assert np.mean(image.estimate.ci_low == 0) >= 0.9
    assert np.mean(image.estimate.total_rate) == pytest.approx(cfg.dark_rate, rel=0.02)


def test_recommended_exposure_hits_the_information_optimum():
    cfg = SensorConfig(eta=0.5, dark_rate=0.0, tau_bin=1e-5, width=32, height=32)
    ci = simulate_counts(FluxMap(np.full(cfg.shape, 1e4)), cfg, 100_000, seed=4)
    tau = recommend_binary_exposure(ci, cfg)
    assert tau == pytest.approx(optimal_lambda() / (1e4 * cfg.eta), rel=0.02)


def test_recommended_exposure_from_saturated_image(unit_sensor):
    cfg = unit_sensor.with_changes(width=2, height=2, eta=0.5)
    tau = recommend_binary_exposure(_counts(np.full((2, 2), 50), 50), cfg)
    floor = flux_from_detection_probability(49 / 50, cfg)
    assert tau == pytest.approx(optimal_lambda() / (floor * cfg.eta))


def test_recommended_exposure_percentile_bounds(unit_sensor):
    with pytest.raises(DomainError):
        recommend_binary_exposure(_counts(np.ones((32, 32)), 10), unit_sensor, percentile=101)
