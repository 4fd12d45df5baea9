import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from spad_sim.core.bitstream import BitplaneStream, CountImage, StreamHeader, row_bytes
from spad_sim.core.photon_model import SensorConfig, detection_probability
from spad_sim.core.simulator.counter_rng import BINOMIAL_COUNTS, SPAD_FRAMES, keyed_generator
from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

FRAMES_PER_TASK = 64


def _check_inputs(flux: FluxMap, cfg: SensorConfig, n_frames: int) -> None:
    if flux.shape != cfg.shape:
        raise DimensionMismatchError(
            f"flux map is {flux.width}x{flux.height} but sensor is {cfg.width}x{cfg.height}"
        )
    if n_frames < 1:
        raise DomainError(f"n_frames must be >= 1, got {n_frames}")


def simulate_spad(flux: FluxMap, cfg: SensorConfig, n_frames: int, seed: int, workers: int = 1) -> BitplaneStream:
    """
    Sample a stream of binary frames.

    Pixel (y, x) of frame f fires when the (y * width + x)-th uniform of the
    generator keyed on (seed, f) falls below p = 1 - exp(-(φη + r_d)τ).
    Workers fill disjoint frame ranges of one preallocated payload.
    """
    _check_inputs(flux, cfg, n_frames)
    height, width = cfg.shape
    p_detect = np.asarray(detection_probability(flux.flux, cfg)).ravel()
    payload = np.empty((n_frames, height, row_bytes(width)), dtype=np.uint8)

    def fill(start: int) -> None:
        for frame in range(start, min(start + FRAMES_PER_TASK, n_frames)):
            u = keyed_generator(seed, frame, SPAD_FRAMES).random(p_detect.size)
            payload[frame] = np.packbits((u < p_detect).reshape(height, width), axis=1)

    starts = range(0, n_frames, FRAMES_PER_TASK)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(fill, starts))
    else:
        for start in starts:
            fill(start)

    header = StreamHeader(
        width=width,
        height=height,
        frame_count=n_frames,
        tau_bin=cfg.tau_bin,
        eta=cfg.eta,
        dark_rate=cfg.dark_rate,
        rng_seed=seed,
    )
    logger.info(f"Simulated {n_frames} binary frames at {width}x{height} (seed {seed})")
    return BitplaneStream(header=header, payload=payload)


def simulate_counts(flux: FluxMap, cfg: SensorConfig, n_frames: int, seed: int) -> CountImage:
    """Draw per-pixel counts from Binomial(N, p) without materializing frames."""
    _check_inputs(flux, cfg, n_frames)
    p_detect = np.asarray(detection_probability(flux.flux, cfg))
    counts = keyed_generator(seed, 0, BINOMIAL_COUNTS).binomial(n_frames, p_detect)
    return CountImage(counts.astype(np.uint32), n_frames)
