"""Hybrid particle swarm optimizer with an op-amp sizing problem."""

from ._core import (
    GenerationExhausted,
    PsoConfig,
    RandomDraws,
    RetryStart,
    RunResult,
    SimulationError,
    bench,
    inertia_weight,
    opamp,
    optimize,
    spice,
    update_velocity,
)

__all__ = [
    "GenerationExhausted",
    "PsoConfig",
    "RandomDraws",
    "RetryStart",
    "RunResult",
    "SimulationError",
    "bench",
    "inertia_weight",
    "opamp",
    "optimize",
    "spice",
    "update_velocity",
]
