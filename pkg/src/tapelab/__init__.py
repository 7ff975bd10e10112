"""Simulation lab for plan-graph agents with an exact path-selection solver, on Sokoban."""

from .agents import AgentConfig, EpisodeResult, Framework, run_episode
from .bounds import BoundInput, u_ours, u_pa, u_react
from .core import Budget, RngStream, TrajectoryRecord
from .errors import ErrorParams, estimate_errors
from .harness import ExperimentConfig, compare_cells, preset_config, run_experiment
from .sokoban import SokobanInstance, SokobanState, generate_instance

__version__ = "0.1.0"
