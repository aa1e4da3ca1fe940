"""
Scripted policies that stand in for a trained model at every tick.
"""
import logging
from abc import ABC, abstractmethod
from collections import deque
from typing import Deque, Dict, List, Optional, Sequence

import numpy as np

from ..codec.rvq import RvqCodec
from ..constants import ERROR_MESSAGES
from ..errors import DuplexError
from ..models import Channel, ConversationTimeline, TokenKind, TokenSlot
from ..sequence.models import BuilderConfig, InterleavedSequence
from ..sequence.services import SequenceService, Tokenizer
from ..sequence.tokenizers import WordTokenizer
from .models import DuplexState, PolicyDecision, StepContext

logger = logging.getLogger(__name__)

_SILENT = PolicyDecision(text_slot=TokenSlot.special(TokenKind.SIL))


class Policy(ABC):
    """Decides the assistant text slot for one frame."""

    name = "policy"
    lookahead_frames = 0

    def reset(self) -> None:
        """Return to the start-of-session state."""

    @abstractmethod
    def decide(self, context: StepContext) -> PolicyDecision:
        raise NotImplementedError

    def describe(self) -> Dict:
        return {"name": self.name}


class SilentPolicy(Policy):
    name = "silent"

    def decide(self, context: StepContext) -> PolicyDecision:
        return _SILENT


class ScriptedTimelinePolicy(Policy):
    """
    Replays the assistant channel of a known timeline, block for block as
    the builder lays it out. With ``lookahead`` the replayed text runs
    ``config.lookahead_frames`` ahead of the speech.
    """

    name = "scripted"

    def __init__(
        self,
        timeline: ConversationTimeline,
        codec: RvqCodec,
        tokenizer: Optional[Tokenizer] = None,
        config: Optional[BuilderConfig] = None,
        n_frames: Optional[int] = None,
        lookahead: bool = False,
    ) -> None:
        self.timeline = timeline
        sequence = SequenceService.build_sequence(
            timeline, tokenizer or WordTokenizer(), codec, config or BuilderConfig(), n_frames=n_frames)
        if lookahead:
            sequence = SequenceService.apply_text_lookahead(sequence)
        self.sequence: InterleavedSequence = sequence
        self.lookahead_frames = sequence.lookahead_applied
        self._voiced = {f for run in sequence.speaking_runs for f in range(run.start, run.end)}

        self._tags: Dict[int, str] = {}
        for event in timeline.channel_events(Channel.ASSISTANT):
            span = SequenceService.word_layout(event, timeline.clock)[0][1]
            self._tags[span.start - self.lookahead_frames] = event.content_tag

    def decide(self, context: StepContext) -> PolicyDecision:
        if context.frame_index >= len(self.sequence):
            return _SILENT
        block = self.sequence.blocks[context.frame_index]
        return PolicyDecision(
            text_slot=block.text_slot,
            assistant_codes=block.assistant_speech,
            content_tag=self._tags.get(context.frame_index),
            voiced=context.frame_index in self._voiced if self.lookahead_frames else None,
        )

    def describe(self) -> Dict:
        return {"name": self.name, "session_id": self.timeline.session_id, "lookahead_frames": self.lookahead_frames}


class ThresholdVadPolicy(Policy):
    """
    Energy-free voice activity stand-in: answers once the user has been
    silent for ``threshold_frames`` frames in a row. Only the frames before
    the current one count, so the onset lands at the first frame after the
    threshold is reached. Each answer word is BOW, its text tokens, one PAD.
    """

    name = "vad"

    def __init__(
        self,
        threshold_frames: int = 8,
        response: Sequence[str] = ("okay", "sounds", "good"),
        tokenizer: Optional[Tokenizer] = None,
        yield_on_barge_in: bool = False,
        content_tag: str = "response",
    ) -> None:
        if threshold_frames < 1:
            raise DuplexError(ERROR_MESSAGES["invalid_policy"].format(policy=f"vad:{threshold_frames}"))
        self.threshold_frames = threshold_frames
        self.response = tuple(response)
        self.tokenizer = tokenizer or WordTokenizer()
        self.yield_on_barge_in = yield_on_barge_in
        self.content_tag = content_tag
        self.reset()

    def reset(self) -> None:
        self._silent_run = 0
        self._armed = False
        self._queue: Deque[TokenSlot] = deque()

    def _script(self) -> List[TokenSlot]:
        slots: List[TokenSlot] = []
        for word in self.response:
            slots.append(TokenSlot.special(TokenKind.BOW))
            slots.extend(TokenSlot.text_token(t) for t in self.tokenizer(word))
            slots.append(TokenSlot.special(TokenKind.PAD))
        return slots

    def decide(self, context: StepContext) -> PolicyDecision:
        silent_before = self._silent_run
        if context.user_active:
            self._silent_run = 0
            self._armed = True
        else:
            self._silent_run += 1

        if self._queue:
            if self.yield_on_barge_in and context.user_active:
                logger.debug(f"Yielding to user barge-in at frame {context.frame_index}")
                self._queue.clear()
                return _SILENT
            return PolicyDecision(text_slot=self._queue.popleft())

        if self._armed and silent_before >= self.threshold_frames and not context.user_active:
            self._armed = False
            self._queue.extend(self._script())
            return PolicyDecision(text_slot=self._queue.popleft(), content_tag=self.content_tag)
        return _SILENT

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "threshold_frames": self.threshold_frames,
            "yield_on_barge_in": self.yield_on_barge_in,
        }


class RandomPolicy(Policy):
    """Seeded fuzzing source. Emits every slot kind, illegal ones included."""

    name = "random"
    _KINDS = (TokenKind.SIL, TokenKind.BOW, TokenKind.BC, TokenKind.TEXT, TokenKind.PAD)

    def __init__(self, seed: int = 0, weights: Sequence[float] = (0.4, 0.15, 0.05, 0.25, 0.15)) -> None:
        self.seed = seed
        self.weights = np.asarray(weights, dtype=np.float64) / np.sum(weights)
        self.reset()

    def reset(self) -> None:
        self._rng = np.random.default_rng(self.seed)

    def decide(self, context: StepContext) -> PolicyDecision:
        kind = self._KINDS[int(self._rng.choice(len(self._KINDS), p=self.weights))]
        if kind is TokenKind.TEXT:
            return PolicyDecision(text_slot=TokenSlot.text_token(f"w{int(self._rng.integers(100))}"))
        tag = "random" if kind.is_opener and context.state is DuplexState.LISTENING else None
        return PolicyDecision(text_slot=TokenSlot.special(kind), content_tag=tag)

    def describe(self) -> Dict:
        return {"name": self.name, "seed": self.seed}


def policy_from_name(
    spec: str,
    timeline: Optional[ConversationTimeline] = None,
    codec: Optional[RvqCodec] = None,
    seed: int = 0,
    **scripted_options,
) -> Policy:
    """
    Resolve a CLI policy name: ``silent``, ``scripted``, ``random`` or
    ``vad:THRESH``.
    """
    name, _, arg = spec.partition(":")
    if name == "silent" and not arg:
        return SilentPolicy()
    if name == "scripted" and not arg:
        if timeline is None or codec is None:
            raise DuplexError(ERROR_MESSAGES["invalid_policy"].format(policy=spec))
        return ScriptedTimelinePolicy(timeline, codec, **scripted_options)
    if name == "random" and not arg:
        return RandomPolicy(seed=seed)
    if name == "vad":
        try:
            return ThresholdVadPolicy(threshold_frames=int(arg or 8))
        except ValueError as exc:
            if isinstance(exc, DuplexError):
                raise
            raise DuplexError(ERROR_MESSAGES["invalid_policy"].format(policy=spec)) from exc
    raise DuplexError(ERROR_MESSAGES["invalid_policy"].format(policy=spec))
