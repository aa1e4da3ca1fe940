"""
Value objects shared by every part of the toolkit.

All times are integer sample counts at the clock's sample rate; intervals
are half-open.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Tuple

from .constants import ERROR_MESSAGES, FRAME_RATE, SAMPLE_RATE


class TokenKind(str, Enum):
    """Text-slot token kinds."""

    SIL = "SIL"
    BOW = "BOW"
    BC = "BC"
    PAD = "PAD"
    TEXT = "TEXT"

    @property
    def is_opener(self) -> bool:
        return self in (TokenKind.BOW, TokenKind.BC)


class Channel(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"

    @property
    def other(self) -> "Channel":
        return Channel.ASSISTANT if self is Channel.USER else Channel.USER


class Role(str, Enum):
    SPEECH = "speech"
    BACKCHANNEL = "backchannel"
    INTERRUPT = "interrupt"
    SIMULTANEOUS = "simultaneous"


@dataclass(frozen=True)
class FrameClock:
    """Maps the 24 kHz sample timeline onto the 12.5 Hz token grid."""

    frame_rate: float = FRAME_RATE
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        if self.frame_rate <= 0 or self.sample_rate <= 0:
            raise ValueError(ERROR_MESSAGES["invalid_clock"].format(
                sample_rate=self.sample_rate, frame_rate=self.frame_rate))
        per_frame = self.sample_rate / self.frame_rate
        if not float(per_frame).is_integer() or per_frame * self.frame_rate != self.sample_rate:
            raise ValueError(ERROR_MESSAGES["invalid_clock"].format(
                sample_rate=self.sample_rate, frame_rate=self.frame_rate))

    @property
    def samples_per_frame(self) -> int:
        return int(self.sample_rate / self.frame_rate)

    def ms_to_samples(self, ms: float) -> int:
        return int(round(ms * self.sample_rate / 1000.0))

    def samples_to_seconds(self, samples: int) -> float:
        return samples / self.sample_rate


class FrameSpan(NamedTuple):
    """Half-open range of frame indices."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SampleInterval:
    """
    Half-open [start_sample, end_sample) interval.
    Construction does not reject reversed intervals so that invalid
    timelines can be represented and reported by validation.
    """

    start_sample: int
    end_sample: int

    @property
    def is_valid(self) -> bool:
        return 0 <= self.start_sample < self.end_sample

    @property
    def duration(self) -> int:
        return self.end_sample - self.start_sample

    def contains(self, other: "SampleInterval") -> bool:
        return self.start_sample <= other.start_sample and other.end_sample <= self.end_sample

    def contains_sample(self, sample: int) -> bool:
        return self.start_sample <= sample < self.end_sample

    def shifted(self, offset: int) -> "SampleInterval":
        return SampleInterval(self.start_sample + offset, self.end_sample + offset)


@dataclass(frozen=True)
class TokenSlot:
    """One text-slot token: a special kind or a text payload."""

    kind: TokenKind
    text: Optional[str] = None
    loss_weight: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, TokenKind):
            object.__setattr__(self, "kind", TokenKind(self.kind))
        if (self.kind is TokenKind.TEXT) != (self.text is not None):
            raise ValueError(ERROR_MESSAGES["invalid_slot"].format(
                reason="text payload must be present exactly for TEXT"))
        if self.loss_weight < 0:
            raise ValueError(ERROR_MESSAGES["invalid_slot"].format(reason="negative loss weight"))

    @classmethod
    def special(cls, kind: TokenKind, loss_weight: float = 0.0) -> "TokenSlot":
        return cls(kind=kind, loss_weight=loss_weight)

    @classmethod
    def text_token(cls, text: str, loss_weight: float = 0.0) -> "TokenSlot":
        return cls(kind=TokenKind.TEXT, text=text, loss_weight=loss_weight)

    def with_weight(self, loss_weight: float) -> "TokenSlot":
        return TokenSlot(kind=self.kind, text=self.text, loss_weight=loss_weight)

    @property
    def is_silent(self) -> bool:
        return self.kind is TokenKind.SIL


SIL = TokenSlot.special(TokenKind.SIL)


@dataclass(frozen=True)
class WordAlignment:
    word: str
    interval: SampleInterval


@dataclass(frozen=True)
class UtteranceEvent:
    """One utterance on one channel, with its word alignments."""

    channel: Channel
    role: Role
    interval: SampleInterval
    words: Tuple[WordAlignment, ...] = ()
    content_tag: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "words", tuple(self.words))

    @property
    def text(self) -> str:
        return " ".join(w.word for w in self.words)

    @property
    def start_sample(self) -> int:
        return self.interval.start_sample

    @property
    def end_sample(self) -> int:
        return self.interval.end_sample


@dataclass(frozen=True)
class ConversationTimeline:
    """Dual-channel record of one conversation."""

    session_id: str
    clock: FrameClock = field(default_factory=FrameClock)
    events: Tuple[UtteranceEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))

    def channel_events(self, channel: Channel) -> Tuple[UtteranceEvent, ...]:
        return tuple(e for e in self.events if e.channel is channel)

    @property
    def end_sample(self) -> int:
        return max((e.end_sample for e in self.events), default=0)


@dataclass(frozen=True)
class Violation:
    """A single invariant breach found by a validator."""

    code: str
    message: str
    indices: Tuple[int, ...] = ()

    def __str__(self) -> str:
        where = f" at {list(self.indices)}" if self.indices else ""
        return f"{self.code}{where}: {self.message}"
