from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from ..constants import (
    ERROR_MESSAGES, JSD_BINS, JSD_SMOOTHING, POST_ANCHOR_MARGIN_SECONDS, TAKEOVER_MIN_SECONDS,
    TAKEOVER_MIN_WORDS, TAKEOVER_RULES,
)
from ..errors import DuplexError
from ..models import SampleInterval


class BehaviorLabel(str, Enum):
    RESPOND = "Respond"
    RESUME = "Resume"
    UNCERTAIN = "Uncertain"
    UNKNOWN = "Unknown"


class Scenario(str, Enum):
    PAUSE_HANDLING = "pause_handling"
    BACKCHANNEL = "backchannel"
    SMOOTH_TURN_TAKING = "smooth_turn_taking"
    USER_INTERRUPTION = "user_interruption"
    USER_BACKCHANNEL = "user_backchannel"
    BACKGROUND_SPEECH = "background_speech"
    TALKING_TO_OTHERS = "talking_to_others"

    @property
    def is_overlap(self) -> bool:
        return self in OVERLAP_SCENARIOS


OVERLAP_SCENARIOS = frozenset({
    Scenario.USER_INTERRUPTION,
    Scenario.USER_BACKCHANNEL,
    Scenario.BACKGROUND_SPEECH,
    Scenario.TALKING_TO_OTHERS,
})

SUITES: Dict[str, Tuple[Scenario, ...]] = {
    "v1.0": (Scenario.PAUSE_HANDLING, Scenario.BACKCHANNEL, Scenario.SMOOTH_TURN_TAKING, Scenario.USER_INTERRUPTION),
    "v1.5": (Scenario.USER_BACKCHANNEL, Scenario.BACKGROUND_SPEECH, Scenario.TALKING_TO_OTHERS,
             Scenario.USER_INTERRUPTION),
}


@dataclass(frozen=True)
class EvalConfig:
    """Takeover thresholds, latency margin and histogram settings."""

    takeover_min_seconds: float = TAKEOVER_MIN_SECONDS
    takeover_min_words: int = TAKEOVER_MIN_WORDS
    post_anchor_margin_seconds: float = POST_ANCHOR_MARGIN_SECONDS
    jsd_bins: int = JSD_BINS
    jsd_smoothing: float = JSD_SMOOTHING
    takeover_rule: str = "or"

    def __post_init__(self) -> None:
        thresholds = (self.takeover_min_seconds, self.takeover_min_words, self.post_anchor_margin_seconds,
                      self.jsd_smoothing)
        if any(t <= 0 for t in thresholds):
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason="thresholds must be positive"))
        if self.jsd_bins < 2:
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason="jsd_bins must be at least 2"))
        if self.takeover_rule not in TAKEOVER_RULES:
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(
                reason=f"takeover_rule must be one of {TAKEOVER_RULES}"))


@dataclass(frozen=True)
class Segment:
    """A maximal assistant speaking run, in samples."""

    start_sample: int
    end_sample: int
    word_count: int
    opener: str
    content_tag: str = ""

    @property
    def interval(self) -> SampleInterval:
        return SampleInterval(self.start_sample, self.end_sample)


@dataclass(frozen=True)
class ScenarioAnchors:
    """Ground-truth reference points of one sample, taken from its timeline."""

    window: SampleInterval
    stop_anchor: Optional[int] = None
    response_anchor: Optional[int] = None
    search_from: Optional[int] = None
    overlap: Optional[SampleInterval] = None
    pre_overlap_tag: str = ""
    overlap_tag: str = ""


@dataclass(frozen=True)
class SampleResult:
    session_id: str
    scenario: Scenario
    takeover: bool
    backchannel_count: int = 0
    backchannel_positions: Tuple[float, ...] = ()
    stop_latency: Optional[float] = None
    response_latency: Optional[float] = None
    behavior: BehaviorLabel = BehaviorLabel.UNKNOWN
    coercions: int = 0


@dataclass(frozen=True)
class MetricReport:
    scenario: str
    total_n: int
    tor: float
    backchannel_freq: float
    jsd: float
    behavior_distribution: Dict[str, float] = field(default_factory=dict)
    stop_latency_mean: Optional[float] = None
    stop_n: int = 0
    response_latency_mean: Optional[float] = None
    response_n: int = 0
    coercion_count: int = 0
