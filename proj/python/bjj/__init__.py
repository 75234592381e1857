"""Bosonic Josephson junction toolkit: elliptic functions, junction dynamics,
parameter maps and fitting.  Energies are angular frequencies in rad/s and
times are in seconds."""

from . import _bjj
from ._bjj import (
    ConfigError,
    DegeneracyError,
    DomainError,
    Error,
    GuardBandError,
    InitialState,
    IntegrationError,
    PendulumParams,
    Regime,
    SingularityError,
    TmbhParams,
    Trajectory,
    analytic,
    elliptic,
    estimation,
    numeric,
    param_map,
    regime_name,
)


def cli(*args: str) -> int:
    """Runs `bjj <args>` in-process and returns the exit code."""
    return _bjj.run_cli(["bjj", *args])


__all__ = [name for name in dir() if not name.startswith("_")]
