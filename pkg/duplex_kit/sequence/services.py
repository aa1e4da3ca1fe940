"""
Service layer for the interleaved duplex token sequence.

Per frame the sequence holds [user speech, assistant text slot, assistant
speech]. Each assistant word occupies the frames from its onset to the next
word's onset (the last word runs to the utterance end): the onset frame
carries BOW (BC inside a backchannel), the word's text tokens follow, PAD
fills the rest. Frames outside assistant utterances carry SIL.
"""
import logging
from dataclasses import replace
from typing import Callable, List, Optional, Sequence, Tuple

from ..codec.rvq import CodecFrame, RvqCodec
from ..constants import ERROR_MESSAGES, VIOLATIONS
from ..errors import (
    FrameCollisionError, LookaheadUnderflowError, SequenceGrammarError, SpanCapacityError, DuplexError,
)
from ..models import (
    Channel, ConversationTimeline, FrameClock, FrameSpan, Role, TokenKind, TokenSlot,
    UtteranceEvent, Violation,
)
from ..timeline.services import TimelineService
from .models import (
    BuilderConfig, FrameBlock, InterleavedSequence, InvertedSequence, SpeakingSpan, WordOnset,
)

logger = logging.getLogger(__name__)

Tokenizer = Callable[[str], Sequence[str]]


class SequenceService:
    """Service class for building, shifting, weighting and inverting sequences."""

    @staticmethod
    def word_layout(event: UtteranceEvent, clock: FrameClock) -> List[Tuple[str, FrameSpan]]:
        """
        Frame span of every word in an utterance. The first word opens at the
        utterance onset frame.
        """
        event_span = TimelineService.to_frames(event.interval, clock)
        if not event.words:
            return [("", event_span)]
        per_frame = clock.samples_per_frame
        onsets = [event_span.start]
        onsets += [w.interval.start_sample // per_frame for w in event.words[1:]]
        ends = onsets[1:] + [event_span.end]
        return [
            (word.word, FrameSpan(start, end))
            for word, start, end in zip(event.words, onsets, ends)
        ]

    @staticmethod
    def _assistant_layouts(
        events: Sequence[UtteranceEvent], clock: FrameClock
    ) -> List[Tuple[UtteranceEvent, List[Tuple[str, FrameSpan]]]]:
        """
        Word layouts of onset-ordered assistant events. When an event ends
        inside the frame where the next one starts, without overlapping it in
        samples, the later onset keeps that frame.
        """
        layouts: List[Tuple[UtteranceEvent, List[Tuple[str, FrameSpan]]]] = []
        for event in events:
            layout = SequenceService.word_layout(event, clock)
            if layouts:
                previous, previous_layout = layouts[-1]
                onset = layout[0][1].start
                word, last = previous_layout[-1]
                if last.end > onset and previous.end_sample <= event.start_sample:
                    previous_layout[-1] = (word, FrameSpan(last.start, onset))
            layouts.append((event, layout))
        return layouts

    @staticmethod
    def weight_for(kind: TokenKind, config: BuilderConfig) -> float:
        if kind is TokenKind.PAD:
            return config.pad_weight
        if kind is TokenKind.SIL:
            return config.sil_weight
        if kind is TokenKind.BC:
            return config.text_weight * config.bc_weight_multiplier
        return config.text_weight

    @staticmethod
    def user_frames(timeline: ConversationTimeline, codec: RvqCodec, n_frames: int) -> List[CodecFrame]:
        """User-channel codec frames: word codes inside user utterances, silence elsewhere."""
        keys: List[Optional[Tuple[str, int]]] = [None] * n_frames
        for event in timeline.channel_events(Channel.USER):
            for word, span in SequenceService.word_layout(event, timeline.clock):
                for offset, frame in enumerate(range(span.start, min(span.end, n_frames))):
                    if keys[frame] is None:
                        keys[frame] = (word or event.content_tag, offset)
        return SequenceService._codes_for(keys, codec)

    @staticmethod
    def _codes_for(keys: List[Optional[Tuple[str, int]]], codec: RvqCodec) -> List[CodecFrame]:
        spoken = [k for k in keys if k is not None]
        frames = iter(codec.speech.frames_for(spoken))
        silence = codec.silence_frame
        return [next(frames) if k is not None else silence for k in keys]

    @staticmethod
    def build_sequence(
        timeline: ConversationTimeline,
        tokenizer: Tokenizer,
        codec: RvqCodec,
        config: Optional[BuilderConfig] = None,
        n_frames: Optional[int] = None,
    ) -> InterleavedSequence:
        """
        Lay the timeline out on the frame grid as one interleaved sequence,
        with loss weights assigned and no lookahead applied.
        """
        config = config or BuilderConfig()
        TimelineService.ensure_valid(timeline)
        clock = timeline.clock
        total = max(n_frames or 0, TimelineService.frame_count(timeline))

        slots: List[TokenSlot] = [TokenSlot.special(TokenKind.SIL)] * total
        speech_keys: List[Optional[Tuple[str, int]]] = [None] * total
        assistant = sorted(timeline.channel_events(Channel.ASSISTANT), key=lambda e: e.start_sample)

        for event, layout in SequenceService._assistant_layouts(assistant, clock):
            opener = TokenKind.BC if event.role is Role.BACKCHANNEL else TokenKind.BOW
            for word, span in layout:
                tokens = list(tokenizer(word)) if word else []
                needed = 1 + len(tokens)
                if span.length < needed:
                    raise SpanCapacityError(word=word, frames=span.length, needed=needed)
                for offset, frame in enumerate(range(span.start, span.end)):
                    if speech_keys[frame] is not None:
                        raise FrameCollisionError(frame=frame)
                    if offset == 0:
                        slots[frame] = TokenSlot.special(opener)
                    elif offset <= len(tokens):
                        slots[frame] = TokenSlot.text_token(tokens[offset - 1])
                    else:
                        slots[frame] = TokenSlot.special(TokenKind.PAD)
                    speech_keys[frame] = (word or event.content_tag, offset)

        user = SequenceService.user_frames(timeline, codec, total)
        speech = SequenceService._codes_for(speech_keys, codec)
        blocks = tuple(
            FrameBlock(frame_index=f, user_speech=user[f], text_slot=slots[f], assistant_speech=speech[f])
            for f in range(total)
        )
        sequence = InterleavedSequence(session_id=timeline.session_id, config=config, blocks=blocks)
        logger.debug(f"Built sequence {timeline.session_id}: {total} frames, {len(assistant)} assistant event(s)")
        return SequenceService.assign_loss_weights(sequence, config)

    @staticmethod
    def assign_loss_weights(seq: InterleavedSequence, config: Optional[BuilderConfig] = None) -> InterleavedSequence:
        """Weight every text slot by its kind under the configured mode."""
        config = config or seq.config
        blocks = tuple(
            replace(b, text_slot=b.text_slot.with_weight(SequenceService.weight_for(b.text_slot.kind, config)))
            for b in seq.blocks
        )
        return replace(seq, config=config, blocks=blocks)

    @staticmethod
    def apply_text_lookahead(seq: InterleavedSequence, k: Optional[int] = None) -> InterleavedSequence:
        """
        Shift text slots ``k`` frames earlier than the speech they describe.
        Frames whose speech is still playing after their text moved away are
        filled with PAD. A negative ``k`` undoes a previous shift.
        """
        config = seq.config
        if k is None:
            k = config.lookahead_frames
        if k == 0:
            return seq
        if k > 0 and (k != config.lookahead_frames or seq.lookahead_applied != 0):
            raise DuplexError(ERROR_MESSAGES["lookahead_mismatch"].format(
                k=k, forward=config.lookahead_frames, applied=seq.lookahead_applied))
        if k < 0 and -k != seq.lookahead_applied:
            raise DuplexError(ERROR_MESSAGES["lookahead_mismatch"].format(
                k=k, forward=config.lookahead_frames, applied=seq.lookahead_applied))

        slots = list(seq.text_slots)
        if k > 0:
            runs = tuple(SequenceService._runs(slots))
            shifted = SequenceService._shift_earlier(slots, k, config)
        else:
            runs = ()
            shifted = SequenceService._shift_later(slots, -k, config, seq.speaking_runs)
        blocks = tuple(replace(b, text_slot=s) for b, s in zip(seq.blocks, shifted))
        return replace(seq, blocks=blocks, lookahead_applied=seq.lookahead_applied + k, speaking_runs=runs)

    @staticmethod
    def _shift_earlier(slots: List[TokenSlot], k: int, config: BuilderConfig) -> List[TokenSlot]:
        n = len(slots)
        for frame in range(min(k, n)):
            if not slots[frame].is_silent:
                raise LookaheadUnderflowError(frame=frame)
        fill = TokenSlot.special(TokenKind.PAD, SequenceService.weight_for(TokenKind.PAD, config))
        shifted = []
        for frame in range(n):
            source = frame + k
            if source < n and not slots[source].is_silent:
                shifted.append(slots[source])
            elif not slots[frame].is_silent:
                shifted.append(fill)
            else:
                shifted.append(slots[frame])
        return shifted

    @staticmethod
    def _shift_later(
        slots: List[TokenSlot],
        k: int,
        config: BuilderConfig,
        runs: Sequence[FrameSpan] = (),
    ) -> List[TokenSlot]:
        """
        Move text back onto its speech. With recorded runs every run frame
        takes the slot emitted ``k`` frames before it and all other frames
        become SIL. Without them the runs are inferred from the shifted slots,
        which needs each run to end in ``k`` fill PADs.
        """
        silent = next(
            (s for s in slots if s.is_silent),
            TokenSlot.special(TokenKind.SIL, SequenceService.weight_for(TokenKind.SIL, config)),
        )
        if runs:
            restored = [silent] * len(slots)
            for span in runs:
                if span.start < k or span.end > len(slots):
                    raise DuplexError(ERROR_MESSAGES["lookahead_trailing"].format(frame=span.end))
                restored[span.start:span.end] = slots[span.start - k:span.end - k]
            return restored
        shifted = list(slots)
        for span in SequenceService._runs(slots):
            tail = slots[span.end - k:span.end] if span.length >= k else slots[span.start:span.end]
            if span.length <= k or any(s.kind is not TokenKind.PAD for s in tail):
                raise DuplexError(ERROR_MESSAGES["lookahead_trailing"].format(frame=span.end))
            content = slots[span.start:span.end - k]
            shifted[span.start:span.start + k] = [silent] * k
            shifted[span.start + k:span.end] = content
        return shifted

    @staticmethod
    def _runs(slots: Sequence[TokenSlot]) -> List[FrameSpan]:
        """Maximal runs of non-SIL slots."""
        runs, start = [], None
        for frame, slot in enumerate(slots):
            if slot.is_silent:
                if start is not None:
                    runs.append(FrameSpan(start, frame))
                    start = None
            elif start is None:
                start = frame
        if start is not None:
            runs.append(FrameSpan(start, len(slots)))
        return runs

    @staticmethod
    def validate_slots(slots: Sequence[TokenSlot]) -> List[Violation]:
        """Check that every non-SIL run parses as ((BOW|BC) TEXT* PAD*)+."""
        violations: List[Violation] = []
        state = "outside"
        for frame, slot in enumerate(slots):
            kind = slot.kind
            if kind is TokenKind.SIL:
                state = "outside"
            elif kind.is_opener:
                state = "text"
            elif kind is TokenKind.TEXT:
                if state == "outside":
                    violations.append(Violation(VIOLATIONS["opener_missing"], "TEXT without word opener", (frame,)))
                elif state == "pad":
                    violations.append(Violation(VIOLATIONS["text_after_pad"], "TEXT after PAD within a word", (frame,)))
            elif kind is TokenKind.PAD:
                if state == "outside":
                    violations.append(Violation(VIOLATIONS["opener_missing"], "PAD without word opener", (frame,)))
                else:
                    state = "pad"
        return violations

    @staticmethod
    def validate_sequence(seq: InterleavedSequence) -> List[Violation]:
        violations = [
            Violation(VIOLATIONS["frame_index"], f"expected frame {expected}, found {block.frame_index}", (expected,))
            for expected, block in enumerate(seq.blocks)
            if block.frame_index != expected
        ]
        return violations + SequenceService.validate_slots(seq.text_slots)

    @staticmethod
    def invert_slots(slots: Sequence[TokenSlot]) -> InvertedSequence:
        """Word onsets and speaking spans of a grammatical slot stream."""
        onsets: List[WordOnset] = []
        spans: List[SpeakingSpan] = []
        for run in SequenceService._runs(slots):
            run_onsets: List[WordOnset] = []
            for frame in range(run.start, run.end):
                slot = slots[frame]
                if slot.kind.is_opener:
                    run_onsets.append(WordOnset(frame=frame, opener=slot.kind.value))
                elif slot.kind is TokenKind.TEXT and run_onsets:
                    last = run_onsets[-1]
                    run_onsets[-1] = replace(last, text=last.text + slot.text)
            onsets.extend(run_onsets)
            spans.append(SpeakingSpan(span=run, opener=slots[run.start].kind.value, onsets=tuple(run_onsets)))
        return InvertedSequence(onsets=tuple(onsets), spans=tuple(spans))

    @staticmethod
    def invert_sequence(seq: InterleavedSequence, clock: Optional[FrameClock] = None) -> InvertedSequence:
        """
        Recover word onsets and speaking spans. Any applied lookahead is
        removed first.
        """
        if seq.lookahead_applied:
            seq = SequenceService.apply_text_lookahead(seq, -seq.lookahead_applied)
        violations = SequenceService.validate_sequence(seq)
        if violations:
            raise SequenceGrammarError(seq.session_id, violations)
        return SequenceService.invert_slots(seq.text_slots)

    @staticmethod
    def to_records(seq: InterleavedSequence, clock: Optional[FrameClock] = None) -> List[dict]:
        from ..schemas import sequence_to_records

        return sequence_to_records(seq, clock)

    @staticmethod
    def from_records(records: Sequence[dict], source: str = "<records>") -> Tuple[InterleavedSequence, FrameClock]:
        from ..schemas import sequence_from_records

        return sequence_from_records(records, source)
