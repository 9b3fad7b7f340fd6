"""Ballistic deposition on finite boxes: simulation, stationary sampling and checks."""
from .lattice import Boundary, BoxSpec, CenteredSample, HeightField
from .dynamics import ChainConfig, UpdateSchedule, run_continuous, run_discrete
from .sampler import SamplerParams, sample, sample_many

__all__ = [
    "Boundary", "BoxSpec", "CenteredSample", "HeightField",
    "ChainConfig", "UpdateSchedule", "run_continuous", "run_discrete",
    "SamplerParams", "sample", "sample_many",
]
__version__ = "0.1.0"
