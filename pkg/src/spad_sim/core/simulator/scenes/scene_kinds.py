import numpy as np
from scipy import ndimage

from spad_sim.core.simulator.counter_rng import SCENE_TEXTURE, keyed_generator
from spad_sim.core.simulator.scenes.base_scene import BaseScene
from spad_sim.errors import DomainError


def _axis_coordinate(width: int, height: int, axis: str) -> np.ndarray:
    if axis == "x":
        return np.broadcast_to(np.arange(width, dtype=np.float64), (height, width))
    if axis == "y":
        return np.broadcast_to(np.arange(height, dtype=np.float64)[:, None], (height, width))
    raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")


class UniformScene(BaseScene):
    kind = "uniform"
    PARAMS = {"flux": None}

    def render(self, width, height, seed):
        return np.full((height, width), float(self.params["flux"]))


class GradientScene(BaseScene):
    """Ramp from flux_min at the first column (or row) to flux_max at the last."""

    kind = "gradient"
    PARAMS = {"flux_min": None, "flux_max": None, "axis": "x", "spacing": "linear"}

    def check_geometry(self, width, height):
        if self.params["spacing"] not in ("linear", "log"):
            raise DomainError(f"spacing must be 'linear' or 'log', got {self.params['spacing']!r}")
        if self.params["spacing"] == "log" and float(self.params["flux_min"]) <= 0:
            raise DomainError("log spacing needs flux_min > 0")
        _axis_coordinate(1, 1, self.params["axis"])

    def render(self, width, height, seed):
        coord = _axis_coordinate(width, height, self.params["axis"])
        extent = (width if self.params["axis"] == "x" else height) - 1
        t = coord / extent if extent > 0 else np.zeros_like(coord)
        lo, hi = float(self.params["flux_min"]), float(self.params["flux_max"])
        if self.params["spacing"] == "log":
            return np.exp(np.log(lo) + t * (np.log(hi) - np.log(lo)))
        return lo + t * (hi - lo)


class CheckerboardScene(BaseScene):
    """Squares of period/2 pixels; the top-left square is flux_low."""

    kind = "checkerboard"
    PARAMS = {"flux_low": None, "flux_high": None, "period": 2}

    def check_geometry(self, width, height):
        period = int(self.params["period"])
        if period < 2 or period % 2:
            raise DomainError(f"checkerboard period must be an even number >= 2, got {period}")
        if period // 2 > max(width, height):
            raise DomainError(f"checkerboard period {period} exceeds image {width}x{height}")

    def render(self, width, height, seed):
        cell = int(self.params["period"]) // 2
        ys, xs = np.indices((height, width))
        parity = (xs // cell + ys // cell) % 2
        return np.where(parity == 0, float(self.params["flux_low"]), float(self.params["flux_high"]))


class HdrStepScene(BaseScene):
    """Two halves: flux_min on the first half, flux_min * ratio on the second."""

    kind = "hdr-step"
    PARAMS = {"flux_min": 1e2, "ratio": 1e5, "axis": "x"}

    def check_geometry(self, width, height):
        if not float(self.params["ratio"]) >= 1:
            raise DomainError(f"hdr-step ratio must be >= 1, got {self.params['ratio']}")
        extent = width if self.params["axis"] == "x" else height
        if extent < 2:
            raise DomainError("hdr-step needs at least two pixels along its axis")

    def render(self, width, height, seed):
        coord = _axis_coordinate(width, height, self.params["axis"])
        extent = width if self.params["axis"] == "x" else height
        lo = float(self.params["flux_min"])
        return np.where(coord < extent // 2, lo, lo * float(self.params["ratio"]))


class DiskScene(BaseScene):
    kind = "disk"
    # a negative center coordinate means the image center
    PARAMS = {"flux_background": None, "flux_disk": None, "center_x": -1.0, "center_y": -1.0, "radius": None}

    def _center(self, width, height):
        cx = float(self.params["center_x"])
        cy = float(self.params["center_y"])
        return (width - 1) / 2 if cx < 0 else cx, (height - 1) / 2 if cy < 0 else cy

    def check_geometry(self, width, height):
        cx, cy = self._center(width, height)
        if not (0 <= cx <= width - 1 and 0 <= cy <= height - 1):
            raise DomainError(f"disk center ({cx}, {cy}) outside image {width}x{height}")
        radius = float(self.params["radius"])
        if not 0 < radius <= max(width, height):
            raise DomainError(f"disk radius must lie in (0, {max(width, height)}], got {radius}")

    def render(self, width, height, seed):
        cx, cy = self._center(width, height)
        ys, xs = np.indices((height, width))
        inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= float(self.params["radius"]) ** 2
        return np.where(inside, float(self.params["flux_disk"]), float(self.params["flux_background"]))


class TextureScene(BaseScene):
    """Smoothed white noise stretched to [flux_min, flux_max]; depends on the seed."""

    kind = "texture"
    PARAMS = {"flux_min": None, "flux_max": None, "correlation": 2.0}

    def check_geometry(self, width, height):
        if not float(self.params["correlation"]) >= 0:
            raise DomainError(f"texture correlation must be >= 0, got {self.params['correlation']}")
        if float(self.params["flux_max"]) < float(self.params["flux_min"]):
            raise DomainError("texture flux_max must be >= flux_min")

    def render(self, width, height, seed):
        noise = keyed_generator(seed, 0, SCENE_TEXTURE).random(height * width).reshape(height, width)
        sigma = float(self.params["correlation"])
        if sigma > 0:
            noise = ndimage.gaussian_filter(noise, sigma=sigma, mode="wrap")
        span = noise.max() - noise.min()
        t = (noise - noise.min()) / span if span > 0 else np.zeros_like(noise)
        lo, hi = float(self.params["flux_min"]), float(self.params["flux_max"])
        return lo + t * (hi - lo)
