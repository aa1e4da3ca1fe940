from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from ..codec.rvq import CodecFrame
from ..models import Channel, FrameClock, FrameSpan, TokenKind, TokenSlot, UtteranceEvent, Violation
from ..sequence.models import FrameBlock


class DuplexState(str, Enum):
    LISTENING = "Listening"
    SPEAKING = "Speaking"


@dataclass(frozen=True)
class PolicyDecision:
    """
    What a policy emits for one frame. ``assistant_codes`` may be left out:
    the engine then voices the frame with silence or mock speech. ``voiced``
    says whether speech is audible at this frame; it defaults to the slot
    not being SIL and only differs under text lookahead.
    """

    text_slot: TokenSlot
    assistant_codes: Optional[CodecFrame] = None
    content_tag: Optional[str] = None
    voiced: Optional[bool] = None


@dataclass(frozen=True)
class StepContext:
    """What a policy may observe at one tick. Nothing from the future."""

    frame_index: int
    user_frame: CodecFrame
    user_active: bool
    state: DuplexState


@dataclass(frozen=True)
class Coercion:
    frame: int
    kind: TokenKind
    state: DuplexState

    def __str__(self) -> str:
        return f"frame {self.frame}: {self.kind.value} while {self.state.value}"


@dataclass(frozen=True)
class SessionLog:
    """Everything one engine run produced, plus the assistant events derived from it."""

    session_id: str
    clock: FrameClock
    blocks: Tuple[FrameBlock, ...] = ()
    state_trace: Tuple[DuplexState, ...] = ()
    events: Tuple[UtteranceEvent, ...] = ()
    coercions: Tuple[Coercion, ...] = ()
    notes: Tuple[Violation, ...] = ()
    segment_tags: Tuple[Tuple[int, str], ...] = ()
    lookahead_frames: int = 0
    policy: str = ""
    speaking_runs: Tuple[FrameSpan, ...] = ()

    def __post_init__(self) -> None:
        for name in ("blocks", "state_trace", "events", "coercions", "notes", "segment_tags"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "speaking_runs", tuple(FrameSpan(*run) for run in self.speaking_runs))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def coercion_count(self) -> int:
        return len(self.coercions)

    @property
    def text_slots(self) -> Tuple[TokenSlot, ...]:
        return tuple(b.text_slot for b in self.blocks)

    @property
    def end_sample(self) -> int:
        return len(self.blocks) * self.clock.samples_per_frame

    @property
    def assistant_events(self) -> Tuple[UtteranceEvent, ...]:
        return tuple(e for e in self.events if e.channel is Channel.ASSISTANT)


def run_length_encode(trace) -> Tuple[Tuple[str, int], ...]:
    runs = []
    for state in trace:
        value = state.value
        if runs and runs[-1][0] == value:
            runs[-1][1] += 1
        else:
            runs.append([value, 1])
    return tuple((value, count) for value, count in runs)


def run_length_decode(runs) -> Tuple[DuplexState, ...]:
    return tuple(DuplexState(value) for value, count in runs for _ in range(int(count)))


def voiced_runs(flags) -> Tuple[FrameSpan, ...]:
    """Maximal runs of frames flagged as voiced."""
    runs, start = [], None
    for frame, voiced in enumerate(list(flags) + [False]):
        if voiced and start is None:
            start = frame
        elif not voiced and start is not None:
            runs.append(FrameSpan(start, frame))
            start = None
    return tuple(runs)
