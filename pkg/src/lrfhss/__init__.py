"""Hopping-sequence families for LR-FHSS, their correlation metrics, and a
slotted gateway simulator with a finite demodulator pool."""
from .lfsr import LfsrConfig, generate_state_sequence, is_maximal, measure_period
from .families import (FAMILY_NAMES, FhSequence, FhsFamily, ConstructionError,
                       build_named_family, build_driver_family, build_li_fan_base)
from .correlation import (hamming_correlation, family_report, is_optimal_wgfhs,
                          minimum_gap, correlation_bound)
from .channel import CodingRate, SimulationConfig, schedule_transmissions, build_occupancy
from .gateway import StrategyConfig, SimMetrics, decode_threshold, run_simulation
from .campaign import run_campaign

__all__ = [
    "LfsrConfig", "generate_state_sequence", "is_maximal", "measure_period",
    "FAMILY_NAMES", "FhSequence", "FhsFamily", "ConstructionError", "build_named_family",
    "build_driver_family", "build_li_fan_base", "hamming_correlation", "family_report",
    "is_optimal_wgfhs", "minimum_gap", "correlation_bound", "CodingRate", "SimulationConfig",
    "schedule_transmissions", "build_occupancy", "StrategyConfig", "SimMetrics",
    "decode_threshold", "run_simulation", "run_campaign",
]
