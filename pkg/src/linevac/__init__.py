"""Evacuation and search on the infinite line by n = 2f+1 agents with faults."""

from .adversary import CrCertificate, EvacOutcome, TargetSpec, competitive_ratio, evacuation_time
from .schedule import Kind, RangeError, ScheduleError, ScheduleParams, TurningPointRef, position_at, turning_point

__all__ = [
    "CrCertificate",
    "EvacOutcome",
    "Kind",
    "RangeError",
    "ScheduleError",
    "ScheduleParams",
    "TargetSpec",
    "TurningPointRef",
    "competitive_ratio",
    "evacuation_time",
    "position_at",
    "turning_point",
]

__version__ = "0.1.0"
