"""Experiment orchestration, file output and the command-line interface."""

from .experiments import (
    FIGURES,
    HeatmapConfig,
    HeatmapResult,
    reproduce_trajectory,
    run_heatmap,
    theorem1_sweep,
)

__all__ = ["FIGURES", "HeatmapConfig", "HeatmapResult", "reproduce_trajectory", "run_heatmap", "theorem1_sweep"]
