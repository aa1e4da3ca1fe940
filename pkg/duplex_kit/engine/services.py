"""
Listening/speaking automaton driven one user frame at a time.
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..codec.rvq import CodecFrame, RvqCodec
from ..constants import ERROR_MESSAGES, VIOLATIONS
from ..errors import DuplexError, EngineFinalizedError, IllegalTransitionError
from ..models import (
    Channel, FrameClock, FrameSpan, Role, SampleInterval, TokenKind, TokenSlot, UtteranceEvent, Violation,
    WordAlignment,
)
from ..sequence.models import BuilderConfig, FrameBlock, InterleavedSequence, InvertedSequence
from ..sequence.services import SequenceService
from .models import Coercion, DuplexState, PolicyDecision, SessionLog, StepContext, voiced_runs
from .policies import Policy

logger = logging.getLogger(__name__)

_SIL = TokenSlot.special(TokenKind.SIL)


class EngineService:
    """Service class for state transitions and session-level operations."""

    @staticmethod
    def transition(state: DuplexState, slot: TokenSlot) -> DuplexState:
        kind = slot.kind
        if kind is TokenKind.SIL:
            return DuplexState.LISTENING
        if state is DuplexState.LISTENING and not kind.is_opener:
            raise IllegalTransitionError(kind=kind.value, state=state.value)
        return DuplexState.SPEAKING

    @staticmethod
    def fold_states(slots: Iterable[TokenSlot]) -> Tuple[DuplexState, ...]:
        trace, state = [], DuplexState.LISTENING
        for slot in slots:
            state = EngineService.transition(state, slot)
            trace.append(state)
        return tuple(trace)

    @staticmethod
    def run_session(
        user_stream: Sequence[CodecFrame],
        policy: Policy,
        clock: Optional[FrameClock] = None,
        codec: Optional[RvqCodec] = None,
        session_id: str = "session",
    ) -> SessionLog:
        """Feed every user frame through a fresh engine and finalize the log."""
        if not user_stream:
            raise DuplexError(ERROR_MESSAGES["empty_stream"])
        clock = clock or (codec.clock if codec is not None else FrameClock())
        codec = codec or RvqCodec.random(depths=4, codebook_size=16, dimension=8, clock=clock)
        engine = DuplexEngine(session_id, policy, codec, clock)
        for frame in user_stream:
            engine.step(frame)
        return engine.finalize()

    @staticmethod
    def invert_session(
        session_id: str,
        blocks: Sequence[FrameBlock],
        lookahead_frames: int,
        speaking_runs: Sequence[FrameSpan] = (),
    ) -> InvertedSequence:
        """Invert the emitted text slots, undoing the policy's lookahead."""
        config = BuilderConfig(lookahead_frames=lookahead_frames)
        sequence = InterleavedSequence(
            session_id, config, tuple(blocks), lookahead_applied=lookahead_frames, speaking_runs=speaking_runs)
        return SequenceService.invert_sequence(sequence)

    @staticmethod
    def _trace_runs(slots: Sequence[TokenSlot], trace: Sequence[DuplexState]) -> InvertedSequence:
        spoken = [s if state is DuplexState.SPEAKING else _SIL for s, state in zip(slots, trace)]
        return SequenceService.invert_slots(spoken)

    @staticmethod
    def derive_events(
        session_id: str,
        clock: FrameClock,
        blocks: Sequence[FrameBlock],
        trace: Sequence[DuplexState],
        segment_tags: Sequence[Tuple[int, str]],
        lookahead_frames: int = 0,
        speaking_runs: Sequence[FrameSpan] = (),
    ) -> Tuple[UtteranceEvent, ...]:
        """
        Assistant events are the maximal speaking runs. Word boundaries come
        from inverting the text slots; if the emitted slots do not invert,
        the raw state-trace runs are used instead.
        """
        shift = lookahead_frames
        try:
            inverted = EngineService.invert_session(session_id, blocks, lookahead_frames, speaking_runs)
        except DuplexError as exc:
            logger.warning(f"Session {session_id}: slots do not invert ({exc}); using state-trace runs")
            inverted = EngineService._trace_runs([b.text_slot for b in blocks], trace)
            shift = 0

        tags: Dict[int, str] = dict(segment_tags)
        per_frame = clock.samples_per_frame
        events = []
        for span in inverted.spans:
            tag = tags.get(span.span.start - shift)
            if tag is None:
                emitted = range(span.span.start - shift, span.span.end - shift)
                tag = next((tags[f] for f in emitted if f in tags), "")
            bounds = [o.frame for o in span.onsets[1:]] + [span.span.end]
            words = tuple(
                WordAlignment(onset.text, SampleInterval(onset.frame * per_frame, end * per_frame))
                for onset, end in zip(span.onsets, bounds)
            )
            events.append(UtteranceEvent(
                channel=Channel.ASSISTANT,
                role=Role.BACKCHANNEL if span.opener == TokenKind.BC.value else Role.SPEECH,
                interval=SampleInterval(span.span.start * per_frame, span.span.end * per_frame),
                words=words,
                content_tag=tag,
            ))
        return tuple(events)

    @staticmethod
    def validate_session(log: SessionLog) -> List[Violation]:
        violations: List[Violation] = []
        if len(log.state_trace) != len(log.blocks):
            violations.append(Violation(
                VIOLATIONS["state_trace"],
                f"{len(log.state_trace)} states for {len(log.blocks)} blocks",
            ))
            return violations
        try:
            expected = EngineService.fold_states(log.text_slots)
        except IllegalTransitionError as exc:
            violations.append(Violation(VIOLATIONS["state_trace"], str(exc)))
        else:
            diverged = [f for f, (a, b) in enumerate(zip(expected, log.state_trace)) if a is not b]
            if diverged:
                violations.append(Violation(VIOLATIONS["state_trace"], "trace is not the fold of the slots", (diverged[0],)))
        try:
            EngineService.invert_session(log.session_id, log.blocks, log.lookahead_frames, log.speaking_runs)
        except DuplexError as exc:
            violations.extend(getattr(exc, "violations", [Violation(VIOLATIONS["opener_missing"], str(exc))]))
        violations.extend(log.notes)
        return violations

    @staticmethod
    def to_records(log: SessionLog) -> List[dict]:
        from ..schemas import session_to_records

        return session_to_records(log)

    @staticmethod
    def from_records(records: Sequence[dict], source: str = "<records>") -> SessionLog:
        from ..schemas import session_from_records

        header, blocks, trailer = session_from_records(records, source)
        events = EngineService.derive_events(
            header["session_id"], header["clock"], blocks, trailer["state_trace"],
            trailer["segment_tags"], header["lookahead_frames"], header["speaking_runs"],
        )
        return SessionLog(
            session_id=header["session_id"],
            clock=header["clock"],
            blocks=blocks,
            state_trace=trailer["state_trace"],
            events=events,
            coercions=trailer["coercions"],
            notes=trailer["notes"],
            segment_tags=trailer["segment_tags"],
            lookahead_frames=header["lookahead_frames"],
            policy=header["policy"],
            speaking_runs=header["speaking_runs"],
        )


class DuplexEngine:
    """One session, strictly sequential. Call ``step`` per user frame, then ``finalize``."""

    def __init__(self, session_id: str, policy: Policy, codec: RvqCodec, clock: Optional[FrameClock] = None):
        self.session_id = session_id
        self.policy = policy
        self.codec = codec
        self.clock = clock or codec.clock
        self.state = DuplexState.LISTENING
        self.finalized = False
        self._blocks: List[FrameBlock] = []
        self._trace: List[DuplexState] = []
        self._coercions: List[Coercion] = []
        self._notes: List[Violation] = []
        self._tags: List[Tuple[int, str]] = []
        self._voiced: List[bool] = []
        self._voice: Tuple[str, int] = ("", 0)
        policy.reset()

    @property
    def frame_index(self) -> int:
        return len(self._blocks)

    def _assistant_codes(self, decision: PolicyDecision, slot: TokenSlot, frame: int) -> CodecFrame:
        if decision.assistant_codes is not None:
            return decision.assistant_codes
        if slot.is_silent:
            return self.codec.silence_frame
        word, offset = self._voice
        if slot.kind.is_opener:
            self._voice = (decision.content_tag or f"{self.session_id}:{frame}", 0)
        else:
            self._voice = (word, offset + 1)
        return self.codec.speech.frame_for(*self._voice)

    def step(self, user_frame: CodecFrame) -> FrameBlock:
        if self.finalized:
            raise EngineFinalizedError(session_id=self.session_id)
        frame = self.frame_index
        context = StepContext(
            frame_index=frame,
            user_frame=user_frame,
            user_active=user_frame != self.codec.silence_frame,
            state=self.state,
        )
        decision = self.policy.decide(context)
        slot = decision.text_slot
        try:
            next_state = EngineService.transition(self.state, slot)
        except IllegalTransitionError as exc:
            logger.warning(f"Session {self.session_id}: coercing frame {frame} to SIL ({exc})")
            self._coercions.append(Coercion(frame=frame, kind=slot.kind, state=self.state))
            decision = PolicyDecision(text_slot=_SIL)
            slot, next_state = _SIL, DuplexState.LISTENING

        if slot.kind is TokenKind.BC and self.state is DuplexState.SPEAKING:
            self._notes.append(Violation(VIOLATIONS["self_backchannel"], "BC while already speaking", (frame,)))
        if decision.content_tag is not None and next_state is DuplexState.SPEAKING:
            self._tags.append((frame, decision.content_tag))

        block = FrameBlock(
            frame_index=frame,
            user_speech=user_frame,
            text_slot=slot,
            assistant_speech=self._assistant_codes(decision, slot, frame),
        )
        self._blocks.append(block)
        self._trace.append(next_state)
        self._voiced.append(not slot.is_silent if decision.voiced is None else decision.voiced)
        self.state = next_state
        return block

    def finalize(self) -> SessionLog:
        if self.finalized:
            raise EngineFinalizedError(session_id=self.session_id)
        self.finalized = True
        lookahead = self.policy.lookahead_frames
        runs = voiced_runs(self._voiced) if lookahead else ()
        events = EngineService.derive_events(
            self.session_id, self.clock, self._blocks, self._trace, self._tags, lookahead, runs)
        log = SessionLog(
            session_id=self.session_id,
            clock=self.clock,
            blocks=self._blocks,
            state_trace=self._trace,
            events=events,
            coercions=self._coercions,
            notes=self._notes,
            segment_tags=self._tags,
            lookahead_frames=lookahead,
            policy=self.policy.name,
            speaking_runs=runs,
        )
        logger.info(
            f"Session {self.session_id}: {len(log)} frames, {len(events)} assistant event(s), "
            f"{log.coercion_count} coercion(s)"
        )
        return log
