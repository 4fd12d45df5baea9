from dataclasses import dataclass

import numpy as np

from spad_sim.errors import DimensionMismatchError, DomainError

# popcount of every byte value, used for per-frame detection totals
POPCOUNT_TABLE = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1).astype(np.uint8)


def row_bytes(width: int) -> int:
    return (int(width) + 7) // 8


def padding_mask(width: int) -> int:
    """Bits of the last byte in a row that must stay zero."""
    used = int(width) % 8
    return 0 if used == 0 else (0xFF >> used)


@dataclass(frozen=True)
class BinaryFrame:
    """
    One 1-bit exposure, rows packed MSB-first and padded to whole bytes.

    bits has shape (height, ceil(width/8)).
    """

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self):
        expected = (self.height, row_bytes(self.width))
        if self.bits.shape != expected:
            raise DimensionMismatchError(f"packed frame has shape {self.bits.shape}, expected {expected}")

    @property
    def nbytes(self) -> int:
        return self.height * row_bytes(self.width)

    def popcount(self) -> int:
        return int(POPCOUNT_TABLE[self.bits].sum())


def pack_frame(pixels: np.ndarray, width: int = None, height: int = None) -> BinaryFrame:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise DimensionMismatchError(f"binary frame must be 2-D, got shape {pixels.shape}")
    h, w = pixels.shape
    if (width is not None and width != w) or (height is not None and height != h):
        raise DimensionMismatchError(f"pixel matrix is {w}x{h}, expected {width}x{height}")
    if pixels.size and not np.isin(pixels, (0, 1)).all():
        raise DomainError("binary frame pixels must be 0 or 1")
    # packbits pads each row with zero bits, MSB first
    bits = np.packbits(pixels.astype(np.uint8), axis=1)
    return BinaryFrame(width=w, height=h, bits=bits)


def unpack_frame(frame: BinaryFrame) -> np.ndarray:
    return np.unpackbits(frame.bits, axis=1, count=frame.width)


def pack_frames(pixels: np.ndarray) -> np.ndarray:
    """Pack a (frames, height, width) boolean stack into (frames, height, row_bytes)."""
    if pixels.ndim != 3:
        raise DimensionMismatchError(f"frame stack must be 3-D, got shape {pixels.shape}")
    return np.packbits(pixels.astype(np.uint8, copy=False), axis=2)
