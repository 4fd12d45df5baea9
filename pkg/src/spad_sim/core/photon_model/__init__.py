from spad_sim.core.photon_model.photon_statistics import (
    FluxEstimate,
    PhotonStatistics,
    SensorConfig,
    detection_probability,
    detections_per_frame,
    expected_detections,
    fisher_information_per_frame,
    flux_from_detection_probability,
    information_shape,
    log_likelihood,
    mle_flux,
    mle_flux_array,
    optimal_binary_exposure,
    optimal_lambda,
    poisson_pmf,
    wilson_interval,
)

__all__ = [
    "FluxEstimate",
    "PhotonStatistics",
    "SensorConfig",
    "detection_probability",
    "detections_per_frame",
    "expected_detections",
    "fisher_information_per_frame",
    "flux_from_detection_probability",
    "information_shape",
    "log_likelihood",
    "mle_flux",
    "mle_flux_array",
    "optimal_binary_exposure",
    "optimal_lambda",
    "poisson_pmf",
    "wilson_interval",
]
