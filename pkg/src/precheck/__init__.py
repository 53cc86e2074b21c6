"""Precheck-sequence detection of false base stations during handover.

Link-level Monte Carlo simulator: zero-padded single-carrier QAM blocks,
a public doubled symbol table, the five-step verified handover exchange, a
guessing false base station, and the precheck (PSD) decision rule next to
three RSS-based baselines.
"""
from .errors import (
    ChannelError,
    ComparisonError,
    ConfigError,
    FramingError,
    PrecheckError,
    ProtocolError,
    SelectionError,
    TrialError,
)
from .harness.config import ScenarioConfig, parse_config
from .harness.engine import ScrEstimate, estimate_scr, run_sweep, run_trial, write_csv

__version__ = "0.1.0"

__all__ = [
    "ChannelError", "ComparisonError", "ConfigError", "FramingError", "PrecheckError",
    "ProtocolError", "SelectionError", "TrialError",
    "ScenarioConfig", "parse_config", "ScrEstimate", "estimate_scr", "run_sweep", "run_trial", "write_csv",
]
