import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from spad_sim.core.bitstream.frames import POPCOUNT_TABLE, row_bytes
from spad_sim.core.bitstream.stream_io import BitplaneStream, check_frame_range
from spad_sim.core.data_access.portable_maps import read_pgm, write_pgm
from spad_sim.core.metrics.intensity_image import MAX_BIT_DEPTH, IntensityImage
from spad_sim.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_FRAMES = 256
MAX_PGM_LEVEL = 65535


@dataclass(frozen=True)
class CountImage:
    """Per-pixel detection counts n over n_frames binary frames."""

    counts: np.ndarray
    n_frames: int

    def __post_init__(self):
        if self.counts.ndim != 2:
            raise DimensionMismatchError(f"count image must be 2-D, got shape {self.counts.shape}")
        if self.n_frames < 1:
            raise DomainError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.counts.size and (self.counts.min() < 0 or self.counts.max() > self.n_frames):
            raise DomainError("counts must lie in [0, n_frames]")

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    def __add__(self, other: "CountImage") -> "CountImage":
        if self.counts.shape != other.counts.shape:
            raise DimensionMismatchError(f"cannot add count images {self.counts.shape} and {other.counts.shape}")
        return CountImage(self.counts + other.counts, self.n_frames + other.n_frames)

    def save_pgm(self, path) -> None:
        """Counts as PGM samples with maxval = n_frames, so the file carries N."""
        if self.n_frames > MAX_PGM_LEVEL:
            raise DomainError(f"count images over {MAX_PGM_LEVEL} frames do not fit a PGM")
        write_pgm(self.counts, self.n_frames, path)

    @classmethod
    def load_pgm(cls, path) -> "CountImage":
        samples, maxval = read_pgm(path)
        return cls(samples.astype(np.uint32), maxval)


class FrameAccumulator:
    """
    Running per-pixel sum of packed binary frames.

    Single-writer: one thread feeds frames; the accumulate() helper below
    parallelizes by giving each worker its own partial sum.
    """

    def __init__(self, width: int, height: int):
        self.width = int(width)
        self.height = int(height)
        self._counts = np.zeros((self.height, self.width), dtype=np.uint32)
        self._frames = 0

    def add_frames(self, packed: np.ndarray) -> None:
        packed = np.asarray(packed)
        if packed.ndim == 2:
            packed = packed[None]
        if packed.shape[1:] != (self.height, row_bytes(self.width)):
            raise DimensionMismatchError(f"packed frames of shape {packed.shape} do not fit {self.width}x{self.height}")
        self._counts += _chunk_counts(packed, self.width)
        self._frames += packed.shape[0]

    @property
    def n_frames(self) -> int:
        return self._frames

    def count_image(self) -> CountImage:
        if self._frames == 0:
            raise DomainError("no frames accumulated yet")
        return CountImage(self._counts.copy(), self._frames)


def _chunk_counts(packed: np.ndarray, width: int) -> np.ndarray:
    # one pass per bit position instead of unpacking the whole chunk; MSB is the leftmost pixel
    counts = np.empty((packed.shape[1], packed.shape[2] * 8), dtype=np.uint32)
    for bit in range(8):
        counts[:, bit::8] = ((packed >> (7 - bit)) & 1).sum(axis=0, dtype=np.uint32)
    return counts[:, :width]


def accumulate(
    stream: BitplaneStream,
    first: int = 0,
    count: int = None,
    workers: int = 1,
    chunk_frames: int = DEFAULT_CHUNK_FRAMES,
) -> CountImage:
    """
    Sum frames [first, first + count) of a stream per pixel.

    Chunks are reduced independently and added in chunk order; integer sums
    make the result bit-identical for any worker count.
    """
    if count is None:
        count = stream.frame_count - first
    check_frame_range(stream.frame_count, first, count)

    starts = range(first, first + count, chunk_frames)

    def partial(start: int) -> np.ndarray:
        stop = min(start + chunk_frames, first + count)
        return _chunk_counts(stream.frames(start, stop - start), stream.width)

    total = np.zeros((stream.height, stream.width), dtype=np.uint32)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for part in executor.map(partial, starts):
                total += part
    else:
        for start in starts:
            total += partial(start)

    logger.debug(f"Accumulated frames [{first}, {first + count}) over {len(starts)} chunk(s)")
    return CountImage(total, count)


def iter_windows(stream: BitplaneStream, window: int, workers: int = 1) -> Iterator[CountImage]:
    """Consecutive, non-overlapping windows of `window` frames; a trailing partial window is dropped."""
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    n_windows = stream.frame_count // window
    if n_windows == 0:
        logger.warning(f"Stream has {stream.frame_count} frames, fewer than one window of {window}")
    for index in range(n_windows):
        yield accumulate(stream, index * window, window, workers=workers)


def frame_popcounts(stream: BitplaneStream, chunk_frames: int = DEFAULT_CHUNK_FRAMES) -> np.ndarray:
    """Number of detections in every frame, counted straight from the packed bytes."""
    totals = np.empty(stream.frame_count, dtype=np.int64)
    for start in range(0, stream.frame_count, chunk_frames):
        chunk = stream.frames(start, min(chunk_frames, stream.frame_count - start))
        totals[start : start + len(chunk)] = POPCOUNT_TABLE[chunk].reshape(len(chunk), -1).sum(axis=1)
    return totals


def to_intensity(ci: CountImage, bit_depth: int) -> IntensityImage:
    """
    Map counts to n-bit gray levels.

    With exactly 2^d frames the count itself is the level (top value clamped),
    otherwise levels are round(count * (2^d - 1) / N).
    """
    if not 1 <= bit_depth <= MAX_BIT_DEPTH:
        raise DomainError(f"bit depth must lie in [1, {MAX_BIT_DEPTH}], got {bit_depth}")
    top = (1 << bit_depth) - 1
    counts = ci.counts.astype(np.int64)
    if ci.n_frames == 1 << bit_depth:
        levels = np.minimum(counts, top)
    else:
        levels = np.floor(counts * top / ci.n_frames + 0.5).astype(np.int64)
        levels = np.minimum(levels, top)
    return IntensityImage(levels.astype(np.uint16), bit_depth)


def equivalent_exposure(bit_depth: int, tau_bin: float) -> float:
    """Total exposure of 2^bit_depth binary frames."""
    if int(bit_depth) != bit_depth or bit_depth < 1:
        raise DomainError(f"bit depth must be an integer >= 1, got {bit_depth}")
    if not tau_bin > 0:
        raise DomainError(f"tau_bin must be > 0, got {tau_bin}")
    return math.ldexp(tau_bin, int(bit_depth))


def equivalent_bit_depth(total_exposure: float, tau_bin: float) -> int:
    """Inverse of equivalent_exposure; the ratio must be an exact power of two."""
    if not total_exposure > 0 or not tau_bin > 0:
        raise DomainError("exposures must be > 0")
    bit_depth = round(math.log2(total_exposure / tau_bin))
    if bit_depth < 1 or not math.isclose(math.ldexp(tau_bin, bit_depth), total_exposure, rel_tol=1e-12):
        raise DomainError(f"{total_exposure} s is not 2^d x {tau_bin} s for any integer d >= 1")
    return bit_depth


def frames_for_exposure(total_exposure: float, tau_bin: float) -> int:
    if not total_exposure > 0 or not tau_bin > 0:
        raise DomainError("exposures must be > 0")
    return max(1, round(total_exposure / tau_bin))


def format_exposure(seconds: float) -> str:
    if seconds < 1e-3:
        return f"{seconds * 1e6:.6g} µs"
    if seconds < 1:
        return f"{seconds * 1e3:.6g} ms"
    return f"{seconds:.6g} s"
