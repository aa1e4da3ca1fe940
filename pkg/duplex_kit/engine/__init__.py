from .models import Coercion, DuplexState, PolicyDecision, SessionLog, StepContext
from .policies import (
    Policy, RandomPolicy, ScriptedTimelinePolicy, SilentPolicy, ThresholdVadPolicy, policy_from_name,
)
from .services import DuplexEngine, EngineService

__all__ = [
    "Coercion",
    "DuplexEngine",
    "DuplexState",
    "EngineService",
    "Policy",
    "PolicyDecision",
    "RandomPolicy",
    "ScriptedTimelinePolicy",
    "SessionLog",
    "SilentPolicy",
    "StepContext",
    "ThresholdVadPolicy",
    "policy_from_name",
]
