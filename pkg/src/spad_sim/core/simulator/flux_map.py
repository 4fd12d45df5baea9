from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from spad_sim.core.data_access.portable_maps import read_pfm, write_pfm
from spad_sim.errors import DomainError

PathLike = Union[str, Path]


@dataclass(frozen=True)
class FluxMap:
    """Ground-truth photon flux per pixel, photons/second."""

    flux: np.ndarray

    def __post_init__(self):
        if self.flux.ndim != 2 or self.flux.size == 0:
            raise DomainError(f"flux map must be a non-empty 2-D array, got shape {self.flux.shape}")
        if not np.all(np.isfinite(self.flux)) or np.any(self.flux < 0):
            raise DomainError("flux values must be finite and >= 0")

    @classmethod
    def from_array(cls, values) -> "FluxMap":
        return cls(np.asarray(values, dtype=np.float64))

    @property
    def width(self) -> int:
        return self.flux.shape[1]

    @property
    def height(self) -> int:
        return self.flux.shape[0]

    @property
    def shape(self):
        return self.flux.shape

    def scaled(self, factor: float) -> "FluxMap":
        return FluxMap(self.flux * float(factor))

    def save_pfm(self, path: PathLike) -> None:
        write_pfm(self.flux, path)

    @classmethod
    def load_pfm(cls, path: PathLike) -> "FluxMap":
        return cls(read_pfm(path))
