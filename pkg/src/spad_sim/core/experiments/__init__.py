from spad_sim.core.experiments.sweep_engine import UNUSABLE, SweepEngine, mean_metrics, render_reference, write_sweep_csv
from spad_sim.core.experiments.sweep_grid import SweepCell, build_grid

__all__ = ["UNUSABLE", "SweepCell", "SweepEngine", "build_grid", "mean_metrics", "render_reference", "write_sweep_csv"]
