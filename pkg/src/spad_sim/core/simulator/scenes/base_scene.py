import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np

from spad_sim.errors import DomainError

logger = logging.getLogger(__name__)


class BaseScene(ABC):
    """
    Abstract base for all synthetic scene kinds.

    Each scene kind exposes:
    - validate(width, height): check parameters against the image geometry
    - render(width, height, seed): return the flux array, photons/second
    """

    kind: str = ""
    # parameter name -> default; None marks a required parameter
    PARAMS: Dict[str, Any] = {}

    def __init__(self, params: Dict[str, Any]):
        unknown = sorted(set(params) - set(self.PARAMS))
        if unknown:
            logger.warning(f"[{self.kind}] ignoring unknown scene parameters: {unknown}")

        missing = [name for name, default in self.PARAMS.items() if default is None and name not in params]
        if missing:
            raise DomainError(f"[{self.kind}] scene is missing required parameters: {missing}")

        self.params = {name: params.get(name, default) for name, default in self.PARAMS.items()}

    def flux_levels(self) -> Tuple[str, ...]:
        return tuple(name for name in self.PARAMS if name.startswith("flux"))

    def validate(self, width: int, height: int) -> None:
        if width < 1 or height < 1:
            raise DomainError(f"scene geometry must be at least 1x1, got {width}x{height}")
        for name in self.flux_levels():
            value = float(self.params[name])
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"[{self.kind}] {name} must be finite and >= 0, got {value}")
        self.check_geometry(width, height)

    def check_geometry(self, width: int, height: int) -> None:
        """Kind-specific bounds checks; the default accepts any size."""

    @abstractmethod
    def render(self, width: int, height: int, seed: int) -> np.ndarray:
        raise NotImplementedError
