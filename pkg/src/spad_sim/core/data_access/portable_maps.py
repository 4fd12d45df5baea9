"""
Readers and writers for the Netpbm-family formats used on disk:

- binary PGM (P5): 8-bit samples when maxval < 256, otherwise 16-bit big-endian.
- grayscale PFM ("Pf"): float32 samples, negative scale = little-endian,
  rows stored bottom-to-top.

Everything here works on plain numpy arrays; typed images live in the
metrics and simulator packages.
"""

import logging
from pathlib import Path
from typing import BinaryIO, List, Tuple, Union

import numpy as np

from spad_sim.core.data_access.atomic_output import atomic_output
from spad_sim.errors import ImageFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_header_tokens(fh: BinaryIO, count: int) -> List[bytes]:
    """Read `count` whitespace-separated tokens, skipping '#' comments."""
    tokens: List[bytes] = []
    token = b""
    while len(tokens) < count:
        c = fh.read(1)
        if not c:
            raise ImageFormatError("unexpected end of file in header")
        if c == b"#" and not token:
            while c not in (b"\n", b""):
                c = fh.read(1)
            continue
        if c.isspace():
            if token:
                tokens.append(token)
                token = b""
            continue
        token += c
    return tokens


def write_pgm(samples: np.ndarray, maxval: int, path: PathLike) -> None:
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ImageFormatError(f"PGM needs a 2-D array, got shape {samples.shape}")
    if not 1 <= maxval <= 65535:
        raise ImageFormatError(f"PGM maxval must lie in [1, 65535], got {maxval}")
    if samples.size and (samples.min() < 0 or samples.max() > maxval):
        raise ImageFormatError(f"samples outside [0, {maxval}]")

    height, width = samples.shape
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    with atomic_output(path) as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(samples.astype(dtype).tobytes())
    logger.debug(f"Wrote PGM {path} ({width}x{height}, maxval {maxval})")


def read_pgm(path: PathLike) -> Tuple[np.ndarray, int]:
    """Return (samples as uint16 array, maxval)."""
    with open(path, "rb") as fh:
        magic, width, height, maxval = _read_header_tokens(fh, 4)
        if magic != b"P5":
            raise ImageFormatError(f"{path}: not a binary PGM (magic {magic!r})")
        try:
            width, height, maxval = int(width), int(height), int(maxval)
        except ValueError as e:
            raise ImageFormatError(f"{path}: malformed PGM header") from e
        if width < 1 or height < 1 or not 1 <= maxval <= 65535:
            raise ImageFormatError(f"{path}: invalid PGM geometry or maxval")

        dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
        expected = width * height * dtype.itemsize
        raw = fh.read(expected)
        if len(raw) != expected:
            raise ImageFormatError(f"{path}: truncated PGM data ({len(raw)} of {expected} bytes)")

    samples = np.frombuffer(raw, dtype=dtype).reshape(height, width).astype(np.uint16)
    if samples.max() > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")
    return samples, maxval


def write_pfm(values: np.ndarray, path: PathLike) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ImageFormatError(f"PFM writer handles grayscale only, got shape {values.shape}")
    height, width = values.shape
    data = np.flipud(values).astype("<f4")
    with atomic_output(path) as fh:
        fh.write(f"Pf\n{width} {height}\n-1.0\n".encode("ascii"))
        fh.write(data.tobytes())
    logger.debug(f"Wrote PFM {path} ({width}x{height})")


def read_pfm(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        tag, width, height, scale = _read_header_tokens(fh, 4)
        if tag == b"PF":
            raise ImageFormatError(f"{path}: color PFM is not supported")
        if tag != b"Pf":
            raise ImageFormatError(f"{path}: not a grayscale PFM (tag {tag!r})")
        try:
            width, height, scale = int(width), int(height), float(scale)
        except ValueError as e:
            raise ImageFormatError(f"{path}: malformed PFM header") from e
        if width < 1 or height < 1 or scale == 0:
            raise ImageFormatError(f"{path}: invalid PFM header")

        dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
        expected = width * height * 4
        raw = fh.read(expected)
        if len(raw) != expected:
            raise ImageFormatError(f"{path}: truncated PFM data ({len(raw)} of {expected} bytes)")

    data = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return np.flipud(data).astype(np.float64)
