"""Seeded execution of actor programs."""

from .config import ActorState, Configuration, InSession, init_configuration
from .semantics import RULES, Redex, SafetyBreach, StaleRedex, TraceEvent, apply, enabled_redexes
from .scheduler import (
    ALL_QUIESCENT, STEP_LIMIT, STUCK, ActorVerdict, FaultTrigger, Outcome, classify,
    load_fault_plan, run,
)

__all__ = [
    "ActorState", "Configuration", "InSession", "init_configuration", "RULES", "Redex",
    "SafetyBreach", "StaleRedex", "TraceEvent", "apply", "enabled_redexes", "ALL_QUIESCENT",
    "STEP_LIMIT", "STUCK", "ActorVerdict", "FaultTrigger", "Outcome", "classify",
    "load_fault_plan", "run",
]
