import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import yaml
from dotenv import load_dotenv

from spad_sim.core.photon_model import SensorConfig
from spad_sim.core.simulator.conventional_simulator import ConventionalCameraConfig
from spad_sim.core.simulator.scenes import SceneSpec
from spad_sim.errors import DomainError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

OUTPUT_DIR_ENV = "SPAD_SIM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "data/output"
CAMERA_MODELS = ("spad", "conventional")


def default_output_dir() -> Path:
    load_dotenv()
    return Path(os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


@dataclass(frozen=True)
class SweepSettings:
    """
    Grid axes of an exposure sweep.

    illuminations are multipliers on the scene flux; exposures are total
    exposure times in seconds, shared by both camera models. Optional
    illumination_labels (e.g. "0.1 lx") are carried into the sweep table as-is.
    Each cell measures images_per_cell consecutive images and reports their
    mean metrics.
    """

    illuminations: List[float]
    exposures: List[float]
    cameras: List[str] = field(default_factory=lambda: list(CAMERA_MODELS))
    spad_bit_depth: int = 8
    eta_optics_match: float = 1.0
    max_stream_frames: int = 4096
    illumination_labels: Optional[List[str]] = None
    images_per_cell: int = 1

    def __post_init__(self):
        if int(self.images_per_cell) < 1:
            raise DomainError(f"images_per_cell must be >= 1, got {self.images_per_cell}")
        if not self.illuminations or not self.exposures or not self.cameras:
            raise DomainError("sweep grid must have at least one illumination, exposure and camera")
        if any(float(level) < 0 for level in self.illuminations):
            raise DomainError(f"illumination levels must be >= 0, got {self.illuminations}")
        if any(not float(t) > 0 for t in self.exposures):
            raise DomainError(f"exposures must be > 0, got {self.exposures}")
        unknown = sorted(set(self.cameras) - set(CAMERA_MODELS))
        if unknown:
            raise DomainError(f"unknown camera models {unknown}; expected one of {CAMERA_MODELS}")
        if self.illumination_labels is not None and len(self.illumination_labels) != len(self.illuminations):
            raise DomainError(
                f"{len(self.illumination_labels)} illumination labels for {len(self.illuminations)} illuminations"
            )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepSettings":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for key in ("illuminations", "exposures"):
            if key in known:
                known[key] = [float(v) for v in known[key]]
        if "images_per_cell" in known:
            known["images_per_cell"] = int(known["images_per_cell"])
        return cls(**known)


@dataclass(frozen=True)
class RunConfig:
    sensor: SensorConfig
    conventional: ConventionalCameraConfig
    scene: SceneSpec
    sweep: SweepSettings
    seed: int = 0
    output_dir: Path = field(default_factory=default_output_dir)
    workers: int = 1

    REQUIRED_KEYS = {"scene", "sweep"}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RunConfig":
        missing = cls.REQUIRED_KEYS - doc.keys()
        if missing:
            raise DomainError(f"run config is missing required keys: {sorted(missing)}")
        for key in ("sensor", "conventional", "scene", "sweep"):
            if key in doc and not isinstance(doc[key], dict):
                raise DomainError(f"run config section '{key}' must be a mapping")

        scene = SceneSpec.from_dict(doc["scene"])
        sensor_doc = dict(doc.get("sensor") or {})
        # the scene's own geometry is the sensor default
        if scene.width is not None:
            sensor_doc.setdefault("width", scene.width)
        if scene.height is not None:
            sensor_doc.setdefault("height", scene.height)

        output_dir = doc.get("output_dir")
        return cls(
            sensor=SensorConfig.from_dict(sensor_doc),
            conventional=ConventionalCameraConfig.from_dict(doc.get("conventional") or {}),
            scene=scene,
            sweep=SweepSettings.from_dict(doc["sweep"]),
            seed=int(doc.get("seed", 0)),
            output_dir=Path(output_dir) if output_dir else default_output_dir(),
            workers=max(1, int(doc.get("workers", 1))),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sensor": self.sensor.to_dict(),
            "conventional": self.conventional.to_dict(),
            "scene": self.scene.to_dict(),
            "sweep": dict(self.sweep.__dict__),
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "workers": self.workers,
        }

    @classmethod
    def load(cls, path: PathLike, overrides: Iterable[str] = ()) -> "RunConfig":
        doc = load_document(path)
        apply_overrides(doc, overrides)
        return cls.from_dict(doc)


def load_document(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    if path.suffix in {".yaml", ".yml"}:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    elif path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
    else:
        raise DomainError(f"Unsupported config file type: {path}")
    if not isinstance(doc, dict):
        raise DomainError(f"{path}: config document must be a mapping")
    return doc


def _parse_value(raw: str) -> Any:
    value = yaml.safe_load(raw)
    # YAML 1.1 reads "1e-5" as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def apply_overrides(doc: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply `dotted.key=value` assignments in place."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise DomainError(f"override must look like key.path=value, got {item!r}")
        parts = key.strip().split(".")
        node = doc
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise DomainError(f"override {item!r}: '{part}' is not a section")
            node = child
        node[parts[-1]] = _parse_value(raw)
        logger.debug(f"Config override {key} = {node[parts[-1]]!r}")
    return doc
