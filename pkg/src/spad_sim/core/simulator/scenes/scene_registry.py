import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Type, Union

import yaml

from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.core.simulator.scenes.base_scene import BaseScene
from spad_sim.core.simulator.scenes.scene_kinds import (
    CheckerboardScene,
    DiskScene,
    GradientScene,
    HdrStepScene,
    TextureScene,
    UniformScene,
)
from spad_sim.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    width: Optional[int] = None
    height: Optional[int] = None

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "SceneSpec":
        if "kind" not in doc:
            raise DomainError("scene spec has no 'kind'")
        params = {k: v for k, v in doc.items() if k not in ("kind", "width", "height")}
        return cls(kind=doc["kind"], params=params, width=doc.get("width"), height=doc.get("height"))

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"kind": self.kind}
        if self.width is not None:
            doc["width"] = self.width
        if self.height is not None:
            doc["height"] = self.height
        doc.update(self.params)
        return doc

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SceneSpec":
        """Scene specs are JSON documents; YAML is accepted as well."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Scene spec not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f) if path.suffix == ".json" else yaml.safe_load(f)
        if not isinstance(doc, dict):
            raise DomainError(f"{path}: scene spec must be a mapping")
        return cls.from_dict(doc)


class SceneRegistry:
    """Maps scene kinds to their classes."""

    def __init__(self):
        self.scenes: Dict[str, Type[BaseScene]] = {}

    def load_all(self) -> None:
        for scene_cls in (UniformScene, GradientScene, CheckerboardScene, HdrStepScene, DiskScene, TextureScene):
            self.register(scene_cls)

    def register(self, scene_cls: Type[BaseScene]) -> None:
        self.scenes[scene_cls.kind] = scene_cls

    def get_scene(self, spec: SceneSpec) -> BaseScene:
        if spec.kind not in self.scenes:
            raise KeyError(f"No scene registered for kind '{spec.kind}'")
        return self.scenes[spec.kind](spec.params)

    @property
    def kinds(self):
        return sorted(self.scenes)


default_registry = SceneRegistry()
default_registry.load_all()


def generate_scene(spec: SceneSpec, width: int = None, height: int = None, seed: int = 0) -> FluxMap:
    """
    Render a scene to a flux map.

    Explicit width/height win over the spec's own; the result is a pure
    function of (spec, geometry, seed).
    """
    width = width if width is not None else spec.width
    height = height if height is not None else spec.height
    if width is None or height is None:
        raise DomainError("scene geometry not given")
    width, height = int(width), int(height)

    scene = default_registry.get_scene(spec)
    scene.validate(width, height)
    flux = FluxMap.from_array(scene.render(width, height, seed))
    logger.debug(f"Rendered {spec.kind} scene {width}x{height}")
    return flux
