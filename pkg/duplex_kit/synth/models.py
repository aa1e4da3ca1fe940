from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

from ..constants import (
    CLARIFICATION_MARKER, ERROR_MESSAGES, FAMILY_ALIASES, SNR_DB_MAX, SNR_DB_MIN, TTS_BASE_MS, TTS_GAP_MS,
    TTS_JITTER, TTS_MIN_ONSET_SPACING_MS, TTS_PER_CHAR_MS,
)
from ..errors import DuplexError
from ..models import Channel, Role

Grammar = Dict[str, Tuple[Tuple[str, ...], ...]]


class Family(str, Enum):
    TASK_ORIENTED = "task_oriented"
    OPEN_DOMAIN = "open_domain"
    SPEECH_GAME = "speech_game"


class Specificity(str, Enum):
    MINIMAL = "minimal"
    TOPIC_GUIDED = "topic_guided"
    DETAILED = "detailed"


class Flow(str, Enum):
    DIRECT = "direct"
    INQUIRY = "inquiry"


class Interaction(str, Enum):
    BACKCHANNEL = "backchannel"
    INTERRUPT = "interrupt"
    SIMULTANEOUS = "simultaneous"


@dataclass(frozen=True)
class ScenarioTemplate:
    """One dialogue setting: family, scenario, prompt specificity, flow and overlap interactions."""

    family: Family
    scenario_id: int
    name: str
    topics: Tuple[str, ...]
    specificity: Specificity = Specificity.TOPIC_GUIDED
    flow: Flow = Flow.DIRECT
    interactions: Tuple[Interaction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "specificity", Specificity(self.specificity))
        object.__setattr__(self, "flow", Flow(self.flow))
        object.__setattr__(self, "topics", tuple(self.topics))
        object.__setattr__(self, "interactions", tuple(Interaction(i) for i in self.interactions))

    @property
    def key(self) -> str:
        short = {v: k for k, v in FAMILY_ALIASES.items()}[self.family.value]
        return f"{short}:{self.scenario_id}"

    @property
    def grammar(self) -> Grammar:
        from .templates import build_grammar

        return build_grammar(self)


@dataclass(frozen=True)
class Turn:
    speaker: Channel
    role: Role
    text: str
    content_tag: str = ""
    marker: str = ""

    @property
    def words(self) -> List[str]:
        return self.text.split()

    @property
    def is_clarification(self) -> bool:
        return self.marker == CLARIFICATION_MARKER


@dataclass(frozen=True)
class DialogueScript:
    template: str
    seed: int
    turns: Tuple[Turn, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))


@dataclass(frozen=True)
class MockTts:
    """
    Affine word-duration model standing in for speech synthesis. A word lasts
    ``base_ms + per_char_ms * len(word)`` scaled by a seeded factor in
    [1 - jitter, 1 + jitter]. Gaps are stretched so that word onsets stay at
    least ``min_onset_spacing_ms`` apart.
    """

    base_ms: float = TTS_BASE_MS
    per_char_ms: float = TTS_PER_CHAR_MS
    gap_ms: float = TTS_GAP_MS
    jitter: float = TTS_JITTER
    min_onset_spacing_ms: float = TTS_MIN_ONSET_SPACING_MS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.base_ms <= 0 or self.per_char_ms < 0 or self.gap_ms < 0 or not 0 <= self.jitter < 1:
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason="mock TTS parameters out of range"))

    def word_duration_ms(self, word: str, rng: np.random.Generator = None) -> float:
        duration = self.base_ms + self.per_char_ms * len(word)
        if rng is not None and self.jitter > 0:
            duration *= rng.uniform(1.0 - self.jitter, 1.0 + self.jitter)
        return duration

    def layout_ms(self, words: List[str], rng: np.random.Generator = None) -> List[Tuple[float, float]]:
        """(onset, end) of every word relative to the utterance onset."""
        spans, onset = [], 0.0
        for word in words:
            end = onset + self.word_duration_ms(word, rng)
            spans.append((onset, end))
            onset = max(end + self.gap_ms, onset + self.min_onset_spacing_ms)
        return spans

    def expected_duration_ms(self, text: str) -> float:
        spans = self.layout_ms(text.split())
        return spans[-1][1] if spans else 0.0


@dataclass(frozen=True)
class TimelineLayout:
    """
    Placement rules for turning scripts into timelines. The assistant answers
    an interruption ``response_delay_ms`` after the interruption ends plus
    ``scoring_margin_ms``.
    """

    turn_gap_ms: float = 300.0
    response_delay_ms: float = 400.0
    scoring_margin_ms: float = 500.0
    backchannel_position: float = 0.5
    simultaneous_offset_ms: float = 200.0

    def __post_init__(self) -> None:
        if min(self.turn_gap_ms, self.response_delay_ms, self.scoring_margin_ms, self.simultaneous_offset_ms) < 0:
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason="layout gaps must be non-negative"))
        if not 0.0 < self.backchannel_position < 1.0:
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason="backchannel_position must be in (0, 1)"))


@dataclass(frozen=True)
class AugmentConfig:
    snr_db_min: float = SNR_DB_MIN
    snr_db_max: float = SNR_DB_MAX

    def __post_init__(self) -> None:
        if self.snr_db_min > self.snr_db_max:
            raise DuplexError(ERROR_MESSAGES["snr_range"].format(low=self.snr_db_min, high=self.snr_db_max))


@dataclass(frozen=True)
class FilterResult:
    kept: bool
    reasons: Tuple[str, ...] = ()

    def __iter__(self):
        return iter((self.kept, list(self.reasons)))


@dataclass
class CorpusResult:
    timelines: List = field(default_factory=list)
    manifest: Dict = field(default_factory=dict)
