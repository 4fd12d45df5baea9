from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from spad_sim.core.data_access.portable_maps import read_pgm, write_pgm
from spad_sim.errors import DomainError, ImageFormatError

PathLike = Union[str, Path]

MAX_BIT_DEPTH = 16


@dataclass(frozen=True)
class IntensityImage:
    """Integer gray levels in [0, 2^d - 1] with a declared bit depth d."""

    samples: np.ndarray
    bit_depth: int

    def __post_init__(self):
        if not 1 <= self.bit_depth <= MAX_BIT_DEPTH:
            raise DomainError(f"bit depth must lie in [1, {MAX_BIT_DEPTH}], got {self.bit_depth}")
        if self.samples.ndim != 2:
            raise DomainError(f"intensity image must be 2-D, got shape {self.samples.shape}")
        if self.samples.size and (self.samples.min() < 0 or self.samples.max() > self.max_level):
            raise DomainError(f"samples outside [0, {self.max_level}]")

    @classmethod
    def from_array(cls, samples, bit_depth: int) -> "IntensityImage":
        arr = np.asarray(samples)
        if arr.size and (arr.min() < 0 or arr.max() > (1 << bit_depth) - 1):
            raise DomainError(f"samples outside [0, {(1 << bit_depth) - 1}]")
        return cls(arr.astype(np.uint16), bit_depth)

    @property
    def max_level(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def normalized(self) -> np.ndarray:
        return self.samples.astype(np.float64) / self.max_level

    def save_pgm(self, path: PathLike) -> None:
        write_pgm(self.samples, self.max_level, path)

    @classmethod
    def load_pgm(cls, path: PathLike) -> "IntensityImage":
        samples, maxval = read_pgm(path)
        bit_depth = int(maxval).bit_length()
        if (1 << bit_depth) - 1 != maxval:
            raise ImageFormatError(f"{path}: maxval {maxval} is not of the form 2^d - 1")
        return cls(samples, bit_depth)


def is_usable(img: IntensityImage) -> bool:
    """False for all-dark or all-saturated images (failed acquisitions)."""
    if img.samples.size == 0:
        return False
    return not (np.all(img.samples == 0) or np.all(img.samples == img.max_level))
