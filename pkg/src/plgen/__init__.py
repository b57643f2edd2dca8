"""plgen: random generation, simulation, evolution and streaming of
multiperspective business-process models and event logs."""

from .evolve import EvolutionConfig, evolve
from .grammar import GrammarConfig, generate_model
from .model import ProcessModel, validate
from .noise import NoiseConfig, profile
from .sim import Event, EventLog, SimulationConfig, Trace, simulate_log

__all__ = [
    "Event",
    "EventLog",
    "EvolutionConfig",
    "GrammarConfig",
    "NoiseConfig",
    "ProcessModel",
    "SimulationConfig",
    "Trace",
    "evolve",
    "generate_model",
    "profile",
    "simulate_log",
    "validate",
]

__version__ = "0.1.0"
