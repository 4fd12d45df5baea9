from spad_sim.core.reconstruction.flux_estimator import FluxImage, estimate_flux_image, recommend_binary_exposure
from spad_sim.core.reconstruction.hdr_fusion import (
    ExposureEntry,
    ExposureStack,
    HdrResult,
    dynamic_range_db,
    hdr_fuse,
    hdr_log_likelihood,
)

__all__ = [
    "ExposureEntry",
    "ExposureStack",
    "FluxImage",
    "HdrResult",
    "dynamic_range_db",
    "estimate_flux_image",
    "hdr_fuse",
    "hdr_log_likelihood",
    "recommend_binary_exposure",
]
