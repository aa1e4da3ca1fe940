from .models import (
    BehaviorLabel, EvalConfig, MetricReport, SampleResult, Scenario, ScenarioAnchors, Segment, SUITES,
)
from .services import EvalService

__all__ = [
    "BehaviorLabel",
    "EvalConfig",
    "EvalService",
    "MetricReport",
    "SUITES",
    "SampleResult",
    "Scenario",
    "ScenarioAnchors",
    "Segment",
]
