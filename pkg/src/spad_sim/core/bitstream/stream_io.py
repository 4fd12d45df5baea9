"""
The `.sbs` binary stream format.

Layout (little-endian):

    magic      4 bytes  b"SBS1"
    width      u32
    height     u32
    frame_count u32
    tau_bin    f64
    eta        f64
    dark_rate  f64
    rng_seed   u64
    payload    frame_count * height * ceil(width/8) bytes

Each frame is a packed BinaryFrame; frames follow each other with no gap.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Tuple, Union

import numpy as np

from spad_sim.core.bitstream.frames import BinaryFrame, padding_mask, row_bytes
from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.core.photon_model import SensorConfig
from spad_sim.errors import (
    BadMagicError,
    DimensionMismatchError,
    DomainError,
    FrameRangeError,
    InconsistentSizeError,
    InvalidHeaderError,
    StreamFormatError,
    TruncatedPayloadError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"SBS1"
HEADER_STRUCT = struct.Struct("<4sIIIdddQ")
HEADER_SIZE = HEADER_STRUCT.size


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    frame_count: int
    tau_bin: float
    eta: float
    dark_rate: float
    rng_seed: int

    def __post_init__(self):
        if self.frame_count < 1:
            raise InvalidHeaderError(f"frame_count must be >= 1, got {self.frame_count}")
        try:
            self.sensor_config()
        except DomainError as e:
            raise InvalidHeaderError(str(e)) from e
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidHeaderError(f"rng_seed must fit in u64, got {self.rng_seed}")

    @property
    def frame_bytes(self) -> int:
        return self.height * row_bytes(self.width)

    @property
    def payload_bytes(self) -> int:
        return self.frame_count * self.frame_bytes

    def sensor_config(self) -> SensorConfig:
        return SensorConfig(
            eta=self.eta,
            dark_rate=self.dark_rate,
            tau_bin=self.tau_bin,
            width=self.width,
            height=self.height,
        )

    def pack(self) -> bytes:
        return HEADER_STRUCT.pack(
            MAGIC,
            self.width,
            self.height,
            self.frame_count,
            self.tau_bin,
            self.eta,
            self.dark_rate,
            self.rng_seed,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "StreamHeader":
        if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
            raise BadMagicError(f"bad magic {raw[:len(MAGIC)]!r}, expected {MAGIC!r}")
        if len(raw) < HEADER_SIZE:
            raise InvalidHeaderError(f"header is {len(raw)} bytes, expected {HEADER_SIZE}")
        _, width, height, frame_count, tau_bin, eta, dark_rate, seed = HEADER_STRUCT.unpack(raw[:HEADER_SIZE])
        if width < 1 or height < 1:
            raise InvalidHeaderError(f"invalid geometry {width}x{height}")
        return cls(width, height, frame_count, tau_bin, eta, dark_rate, seed)


@dataclass
class BitplaneStream:
    """
    Header plus packed payload of shape (frame_count, height, ceil(width/8)).

    The payload may be a read-only memmap; streams are immutable once built.
    """

    header: StreamHeader
    payload: np.ndarray

    def __post_init__(self):
        expected = (self.header.frame_count, self.header.height, row_bytes(self.header.width))
        if self.payload.shape != expected:
            raise DimensionMismatchError(f"payload shape {self.payload.shape} does not match header {expected}")
        if self.payload.dtype != np.uint8:
            raise DomainError(f"payload must be uint8, got {self.payload.dtype}")

    @property
    def width(self) -> int:
        return self.header.width

    @property
    def height(self) -> int:
        return self.header.height

    @property
    def frame_count(self) -> int:
        return self.header.frame_count

    @property
    def sensor_config(self) -> SensorConfig:
        return self.header.sensor_config()

    def frame(self, index: int) -> BinaryFrame:
        if not 0 <= index < self.frame_count:
            raise FrameRangeError(f"frame {index} out of range [0, {self.frame_count})")
        return BinaryFrame(self.width, self.height, self.frames(index, 1)[0])

    def frames(self, first: int, count: int) -> np.ndarray:
        """Frames [first, first + count) as an in-memory array, padding checked as they are read."""
        check_frame_range(self.frame_count, first, count)
        chunk = np.asarray(self.payload[first : first + count])
        check_padding(chunk, self.width, first)
        return chunk


def check_frame_range(frame_count: int, first: int, count: int) -> None:
    if first < 0 or count < 1 or first + count > frame_count:
        raise FrameRangeError(f"frame range [{first}, {first + count}) outside stream of {frame_count} frames")


def check_padding(chunk: np.ndarray, width: int, first: int = 0) -> None:
    pad = padding_mask(width)
    if pad and np.any(chunk[..., -1] & pad):
        raise StreamFormatError(f"nonzero row padding bits in frames [{first}, {first + len(chunk)})")


def write_stream(stream: BitplaneStream, path: PathLike, chunk_frames: int = 1024) -> None:
    with atomic_output(path) as fh:
        fh.write(stream.header.pack())
        for start in range(0, stream.frame_count, chunk_frames):
            fh.write(np.ascontiguousarray(stream.payload[start : start + chunk_frames]).tobytes())
    logger.info(
        f"Wrote stream {path}: {stream.width}x{stream.height}, {stream.frame_count} frames "
        f"({stream.header.payload_bytes} payload bytes)"
    )


def _read_header(path: Path) -> Tuple[StreamHeader, int]:
    file_size = path.stat().st_size
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_SIZE)
    header = StreamHeader.unpack(raw)

    actual = file_size - HEADER_SIZE
    if actual < header.payload_bytes:
        raise TruncatedPayloadError(f"{path}: truncated payload, {actual} of {header.payload_bytes} bytes present")
    if actual > header.payload_bytes:
        raise InconsistentSizeError(
            f"{path}: payload holds {actual} bytes but header declares {header.payload_bytes}"
        )
    return header, file_size


def read_stream(path: PathLike, mmap: bool = True) -> BitplaneStream:
    """
    Decode a `.sbs` file.

    With mmap=True the payload is memory-mapped read-only, so frames are only
    paged in when consumed.
    """
    path = Path(path)
    header, _ = _read_header(path)
    shape = (header.frame_count, header.height, row_bytes(header.width))
    if mmap:
        payload = np.memmap(path, dtype=np.uint8, mode="r", offset=HEADER_SIZE, shape=shape)
    else:
        payload = np.fromfile(path, dtype=np.uint8, offset=HEADER_SIZE).reshape(shape)

    stream = BitplaneStream(header=header, payload=payload)
    # later frames are checked as they are read
    stream.frames(0, 1)

    logger.debug(f"Opened stream {path}: {header}")
    return stream


def iter_frame_chunks(path: PathLike, chunk_frames: int = 256) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (first_frame_index, packed chunk) without loading the whole payload."""
    stream = read_stream(path, mmap=True)
    for start in range(0, stream.frame_count, chunk_frames):
        yield start, stream.frames(start, min(chunk_frames, stream.frame_count - start))
