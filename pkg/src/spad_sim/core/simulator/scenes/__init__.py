from spad_sim.core.simulator.scenes.base_scene import BaseScene
from spad_sim.core.simulator.scenes.scene_registry import SceneRegistry, SceneSpec, default_registry, generate_scene

__all__ = ["BaseScene", "SceneRegistry", "SceneSpec", "default_registry", "generate_scene"]
