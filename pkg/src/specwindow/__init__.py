"""Cycle-level model of branch speculation and its cache side effects."""

from ._backend import BACKEND
from .cache import CacheState
from .checker import ObserverMode, Verdict, check_gadget, compare_models
from .config import CacheGeometry, Mode, ModelConfig
from .errors import (AssemblyError, ConfigError, FuelExhausted, MemoryFault, SimulationError,
                     SpecWindowError)
from .gadgets import GadgetSpec, load_gadget
from .harness import AttackReport, flush_reload_attack, mistrain
from .isa import ArchState, Program, assemble, disassemble, run_seq
from .muarch import SimResult, simulate
from .predictor import PredictorState

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CacheState", "ObserverMode", "Verdict", "check_gadget", "compare_models",
    "CacheGeometry", "Mode", "ModelConfig", "AssemblyError", "ConfigError", "FuelExhausted",
    "MemoryFault", "SimulationError", "SpecWindowError", "GadgetSpec", "load_gadget",
    "AttackReport", "flush_reload_attack", "mistrain", "ArchState", "Program", "assemble",
    "disassemble", "run_seq", "SimResult", "simulate", "PredictorState",
]
