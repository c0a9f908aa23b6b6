"""Search engines: breadth-first search, constant-depth restarting random walks, escape chain."""

from .brfs import RunStats, TieBreaking, run_brfs
from .rrw import RrwConfig, empirical_success_probability, run_rrw

__all__ = [
    "RunStats",
    "TieBreaking",
    "run_brfs",
    "RrwConfig",
    "run_rrw",
    "empirical_success_probability",
]
