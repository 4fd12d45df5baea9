from spad_sim.core.simulator.conventional_simulator import ConventionalCameraConfig, simulate_conventional
from spad_sim.core.simulator.counter_rng import derive_seed, keyed_generator
from spad_sim.core.simulator.flux_map import FluxMap
from spad_sim.core.simulator.scenes import SceneSpec, generate_scene
from spad_sim.core.simulator.spad_simulator import simulate_counts, simulate_spad

__all__ = [
    "ConventionalCameraConfig",
    "FluxMap",
    "SceneSpec",
    "derive_seed",
    "generate_scene",
    "keyed_generator",
    "simulate_conventional",
    "simulate_counts",
    "simulate_spad",
]
