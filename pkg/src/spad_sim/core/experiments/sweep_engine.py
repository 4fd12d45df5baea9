import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from spad_sim.core.bitstream import frames_for_exposure, iter_windows, to_intensity
from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.core.data_access.run_config import RunConfig
from spad_sim.core.experiments.sweep_grid import SweepCell, build_grid
from spad_sim.core.metrics import IntensityImage, MetricsReport, build_report, is_usable
from spad_sim.core.metrics.report import INFINITE_PSNR
from spad_sim.core.simulator import (
    FluxMap,
    derive_seed,
    generate_scene,
    simulate_conventional,
    simulate_counts,
    simulate_spad,
)

logger = logging.getLogger(__name__)

# marks a failed acquisition (all dark or all saturated)
UNUSABLE = "x"
REFERENCE_BIT_DEPTH = 8
METRIC_COLUMNS = ["contrast", "entropy_bits", "sharpness", "ms_ssim", "ms_ssim_scales", "psnr_db"]
COLUMNS = [
    "cell",
    "illumination",
    "illumination_label",
    "exposure_s",
    "exposure_label",
    "camera",
    "seed",
    "n_frames",
    "images",
    "status",
    *METRIC_COLUMNS,
    "error",
]


def render_reference(flux: FluxMap, bit_depth: int = REFERENCE_BIT_DEPTH) -> IntensityImage:
    """Ground truth rendered as an n-bit image, scaled so the brightest pixel is full scale."""
    top = (1 << bit_depth) - 1
    peak = float(flux.flux.max())
    if peak == 0:
        return IntensityImage(np.zeros(flux.shape, dtype=np.uint16), bit_depth)
    levels = np.floor(flux.flux / peak * top + 0.5)
    return IntensityImage(levels.astype(np.uint16), bit_depth)


def mean_metrics(reports: List[MetricsReport]) -> Dict[str, Any]:
    """Per-metric mean over the usable images of one cell."""
    averaged = [name for name in METRIC_COLUMNS if name != "ms_ssim_scales"]
    values: Dict[str, Any] = {name: float(np.mean([getattr(r, name) for r in reports])) for name in averaged}
    values["ms_ssim_scales"] = reports[0].ms_ssim_scales
    if math.isinf(values["psnr_db"]):
        values["psnr_db"] = INFINITE_PSNR
    return values


class SweepEngine:
    """
    Runs every cell of an exposure sweep and collects one metrics row per cell.

    Cells run on a thread pool; each cell draws from its own seed derived from
    (run seed, cell index), so the table is identical for any worker count.
    """

    def __init__(self, config: RunConfig, max_workers: int = None):
        self.config = config
        self.max_workers = max_workers or config.workers
        self.flux = generate_scene(config.scene, config.sensor.width, config.sensor.height, seed=config.seed)
        self.reference = render_reference(self.flux)

    def acquire(self, cell: SweepCell, seed: int, count: int = 1) -> Tuple[List[IntensityImage], Optional[int]]:
        """
        Return `count` consecutive images of one cell and the frames per SPAD image.

        SPAD images are consecutive windows of one stream; conventional images
        are independent frames. n_frames is None for the conventional camera.
        """
        settings = self.config.sweep
        flux = self.flux.scaled(cell.illumination)
        seeds = [seed] + [derive_seed(seed, j) for j in range(1, count)]
        if cell.camera == "conventional":
            images = [
                simulate_conventional(flux, self.config.conventional, cell.exposure_s, settings.eta_optics_match, s)
                for s in seeds
            ]
            return images, None

        sensor = self.config.sensor
        n_frames = frames_for_exposure(cell.exposure_s, sensor.tau_bin)
        if n_frames * count <= settings.max_stream_frames:
            counts = list(iter_windows(simulate_spad(flux, sensor, n_frames * count, seed), n_frames))
        else:
            counts = [simulate_counts(flux, sensor, n_frames, s) for s in seeds]
        return [to_intensity(c, settings.spad_bit_depth) for c in counts], n_frames

    def _run_cell(self, cell: SweepCell) -> Dict[str, Any]:
        seed = derive_seed(self.config.seed, cell.index)
        row: Dict[str, Any] = {
            "cell": cell.index,
            "illumination": cell.illumination,
            "illumination_label": cell.illumination_label,
            "exposure_s": cell.exposure_s,
            "exposure_label": cell.exposure_label,
            "camera": cell.camera,
            "seed": seed,
            "n_frames": "",
            "images": 0,
            "error": "",
        }
        try:
            images, n_frames = self.acquire(cell, seed, self.config.sweep.images_per_cell)
            row["n_frames"] = "" if n_frames is None else n_frames
            usable = [img for img in images if is_usable(img)]
            row["images"] = len(usable)
            if not usable:
                row["status"] = "unusable"
                row.update({name: UNUSABLE for name in METRIC_COLUMNS})
                return row
            row["status"] = "ok"
            row.update(mean_metrics([build_report(img, self.reference) for img in usable]))
        except Exception as e:
            logger.warning(f"Sweep cell {cell.index} ({cell.camera}, {cell.exposure_label}) failed: {e}")
            row["status"] = "error"
            row["error"] = str(e)
            row.update({name: "" for name in METRIC_COLUMNS})
        return row

    def run(self) -> pd.DataFrame:
        cells = build_grid(self.config.sweep)
        rows: List[Dict[str, Any]] = [None] * len(cells)
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {executor.submit(self._run_cell, cell): cell.index for cell in cells}
            for future in tqdm(as_completed(futures), total=len(futures), unit="cell"):
                rows[futures[future]] = future.result()

        table = pd.DataFrame(rows, columns=COLUMNS).astype(object)
        failed = int((table["status"] == "error").sum())
        logger.info(f"Sweep finished: {len(table)} cells, {failed} failed")
        return table


def write_sweep_csv(table: pd.DataFrame, path: Path) -> None:
    with atomic_output(path, mode="w") as fh:
        table.to_csv(fh, index=False, lineterminator="\n")
    logger.info(f"Wrote sweep table {path}")

