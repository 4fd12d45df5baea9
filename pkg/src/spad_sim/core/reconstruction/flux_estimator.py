import logging
from dataclasses import dataclass

import numpy as np

from spad_sim.core.bitstream import CountImage
from spad_sim.core.photon_model import FluxEstimate, SensorConfig, mle_flux_array, optimal_binary_exposure
from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FluxImage:
    """Per-pixel MLE flux with its saturation mask and Wilson bounds."""

    flux: FluxMap
    saturated_mask: np.ndarray
    estimate: FluxEstimate

    @property
    def saturated_fraction(self) -> float:
        return float(self.saturated_mask.mean())


def estimate_flux_image(ci: CountImage, cfg: SensorConfig, confidence: float = 0.95) -> FluxImage:
    if ci.counts.shape != cfg.shape:
        raise DimensionMismatchError(
            f"count image is {ci.width}x{ci.height} but sensor is {cfg.width}x{cfg.height}"
        )
    est = mle_flux_array(ci.counts, ci.n_frames, cfg, confidence)
    if est.saturated.any():
        logger.info(f"{int(est.saturated.sum())} of {est.saturated.size} pixels saturated; flux floored")
    return FluxImage(flux=FluxMap(est.phi_hat), saturated_mask=np.asarray(est.saturated), estimate=est)


def recommend_binary_exposure(ci: CountImage, cfg: SensorConfig, percentile: float = 50.0) -> float:
    """
    Binary exposure that puts the chosen flux percentile at the information
    optimum λ*.

    Uses unsaturated pixels; when every pixel saturated the floors stand in,
    which makes the recommendation an upper bound.
    """
    if not 0 <= percentile <= 100:
        raise DomainError(f"percentile must lie in [0, 100], got {percentile}")
    image = estimate_flux_image(ci, cfg)
    usable = ~image.saturated_mask
    if not usable.any():
        logger.warning("All pixels saturated; recommending from the saturation floor")
        usable = np.ones_like(usable)
    phi = float(np.percentile(image.flux.flux[usable], percentile))
    tau = optimal_binary_exposure(phi, cfg)
    logger.info(f"Flux at p{percentile:g} = {phi:.4g} photons/s -> binary exposure {tau:.4g} s")
    return tau
