import itertools
import logging
from dataclasses import dataclass
from typing import List

from spad_sim.core.bitstream import format_exposure
from spad_sim.core.data_access.run_config import SweepSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepCell:
    index: int
    illumination: float
    exposure_s: float
    camera: str
    illumination_label: str = ""

    @property
    def exposure_label(self) -> str:
        return format_exposure(self.exposure_s)


def build_grid(settings: SweepSettings) -> List[SweepCell]:
    """
    Cartesian product illumination x exposure x camera, in that nesting
    order; cell indices follow the product order.
    """
    labels = settings.illumination_labels or [""] * len(settings.illuminations)
    cells = [
        SweepCell(
            index=i,
            illumination=float(level),
            exposure_s=float(exposure),
            camera=camera,
            illumination_label=str(label),
        )
        for i, ((level, label), exposure, camera) in enumerate(
            itertools.product(zip(settings.illuminations, labels), settings.exposures, settings.cameras)
        )
    ]
    logger.info(
        f"Sweep grid: {len(settings.illuminations)} illumination(s) x {len(settings.exposures)} "
        f"exposure(s) x {len(settings.cameras)} camera(s) = {len(cells)} cells"
    )
    return cells
