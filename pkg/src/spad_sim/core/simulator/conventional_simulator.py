import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from spad_sim.core.metrics.intensity_image import MAX_BIT_DEPTH, IntensityImage
from spad_sim.core.simulator.counter_rng import CONVENTIONAL_READ, CONVENTIONAL_SHOT, keyed_generator
from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConventionalCameraConfig:
    """
    Generic CMOS stand-in: shot noise, Gaussian read noise, full-well clipping
    and a linear ADC. Optional width/height pin the geometry.
    """

    eta_c: float = 0.7
    full_well: float = 10000.0
    read_noise: float = 2.5
    bit_depth: int = 8
    width: int = None
    height: int = None

    def __post_init__(self):
        if not 0 < self.eta_c <= 1:
            raise DomainError(f"eta_c must lie in (0, 1], got {self.eta_c}")
        if not self.full_well > 0 or not math.isfinite(self.full_well):
            raise DomainError(f"full_well must be finite and > 0, got {self.full_well}")
        if not self.read_noise >= 0 or not math.isfinite(self.read_noise):
            raise DomainError(f"read_noise must be finite and >= 0, got {self.read_noise}")
        if not 1 <= int(self.bit_depth) <= MAX_BIT_DEPTH:
            raise DomainError(f"bit_depth must lie in [1, {MAX_BIT_DEPTH}], got {self.bit_depth}")

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConventionalCameraConfig":
        fields = ("eta_c", "full_well", "read_noise", "bit_depth", "width", "height")
        return cls(**{k: data[k] for k in fields if k in data})


def simulate_conventional(
    flux: FluxMap,
    ccfg: ConventionalCameraConfig,
    exposure: float,
    eta_optics_match: float = 1.0,
    seed: int = 0,
) -> IntensityImage:
    """
    Render one frame of the conventional camera.

    eta_optics_match scales the collected light to account for optics that
    differ from the SPAD's.
    """
    if not exposure > 0 or not math.isfinite(exposure):
        raise DomainError(f"exposure must be finite and > 0, got {exposure}")
    if not eta_optics_match > 0:
        raise DomainError(f"eta_optics_match must be > 0, got {eta_optics_match}")
    if ccfg.width is not None and ccfg.height is not None and flux.shape != (ccfg.height, ccfg.width):
        raise DimensionMismatchError(
            f"flux map is {flux.width}x{flux.height} but camera is {ccfg.width}x{ccfg.height}"
        )

    mean_electrons = flux.flux * ccfg.eta_c * exposure * eta_optics_match
    electrons = keyed_generator(seed, 0, CONVENTIONAL_SHOT).poisson(mean_electrons).astype(np.float64)
    if ccfg.read_noise > 0:
        electrons += keyed_generator(seed, 0, CONVENTIONAL_READ).normal(0.0, ccfg.read_noise, size=flux.shape)
    electrons = np.clip(electrons, 0.0, ccfg.full_well)

    top = (1 << int(ccfg.bit_depth)) - 1
    levels = np.minimum(np.floor(electrons * top / ccfg.full_well), top)
    logger.debug(f"Conventional frame: mean signal {mean_electrons.mean():.4g} e-, exposure {exposure} s")
    return IntensityImage(levels.astype(np.uint16), int(ccfg.bit_depth))
