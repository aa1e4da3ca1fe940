from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

from ..codec.rvq import CodecFrame
from ..constants import (
    DEFAULT_BC_WEIGHT_MULTIPLIER, DEFAULT_LOOKAHEAD_FRAMES, DEFAULT_PAD_WEIGHT,
    DEFAULT_TEXT_WEIGHT, ERROR_MESSAGES, SIL_WEIGHTS,
)
from ..models import FrameSpan, TokenSlot


class BuilderMode(str, Enum):
    PRETRAINING = "pretraining"
    FINETUNING = "finetuning"


@dataclass(frozen=True)
class BuilderConfig:
    """Lookahead and loss-weight settings. ``sil_weight`` defaults per mode."""

    lookahead_frames: int = DEFAULT_LOOKAHEAD_FRAMES
    pad_weight: float = DEFAULT_PAD_WEIGHT
    sil_weight: Optional[float] = None
    bc_weight_multiplier: float = DEFAULT_BC_WEIGHT_MULTIPLIER
    text_weight: float = DEFAULT_TEXT_WEIGHT
    mode: BuilderMode = BuilderMode.PRETRAINING

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", BuilderMode(self.mode))
        if self.sil_weight is None:
            object.__setattr__(self, "sil_weight", SIL_WEIGHTS[self.mode.value])
        weights = (self.pad_weight, self.sil_weight, self.bc_weight_multiplier, self.text_weight)
        if self.lookahead_frames < 0 or any(w < 0 for w in weights):
            raise ValueError(ERROR_MESSAGES["invalid_config"].format(
                reason="weights and lookahead must be non-negative"))


@dataclass(frozen=True)
class FrameBlock:
    """One frame: user speech, assistant text slot, assistant speech."""

    frame_index: int
    user_speech: CodecFrame
    text_slot: TokenSlot
    assistant_speech: CodecFrame


@dataclass(frozen=True)
class InterleavedSequence:
    """
    ``speaking_runs`` keeps the speech-aligned non-SIL runs while a lookahead
    is applied: runs closer together than the shift merge in the shifted
    slots, so undoing the shift reads them from here.
    """

    session_id: str
    config: BuilderConfig
    blocks: Tuple[FrameBlock, ...] = ()
    lookahead_applied: int = 0
    speaking_runs: Tuple[FrameSpan, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "speaking_runs", tuple(FrameSpan(*run) for run in self.speaking_runs))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def text_slots(self) -> Tuple[TokenSlot, ...]:
        return tuple(b.text_slot for b in self.blocks)


@dataclass(frozen=True)
class WordOnset:
    frame: int
    opener: str
    text: str = ""


@dataclass(frozen=True)
class SpeakingSpan:
    span: FrameSpan
    opener: str
    onsets: Tuple[WordOnset, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class InvertedSequence:
    """Frame-resolution skeleton recovered from a sequence."""

    onsets: Tuple[WordOnset, ...] = ()
    spans: Tuple[SpeakingSpan, ...] = ()

    @property
    def onset_frames(self) -> Tuple[int, ...]:
        return tuple(o.frame for o in self.onsets)

    @property
    def span_extents(self) -> Tuple[FrameSpan, ...]:
        return tuple(s.span for s in self.spans)
