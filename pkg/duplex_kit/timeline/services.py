"""
Service layer for timeline arithmetic and validation.
Bridges the sample-accurate timeline and the frame grid.
"""
import logging
import math
from typing import List

from ..constants import ERROR_MESSAGES, VIOLATIONS
from ..errors import TimelineValidationError
from ..models import (
    Channel, ConversationTimeline, FrameClock, FrameSpan, Role, SampleInterval, Violation,
)

logger = logging.getLogger(__name__)


class TimelineService:
    """Service class for timeline operations."""

    @staticmethod
    def to_frames(interval: SampleInterval, clock: FrameClock) -> FrameSpan:
        """
        Frames covering the interval: floor the start, ceil the end.
        """
        if not interval.is_valid:
            raise ValueError(ERROR_MESSAGES["invalid_interval"].format(
                start=interval.start_sample, end=interval.end_sample))
        per_frame = clock.samples_per_frame
        start = interval.start_sample // per_frame
        end = -(-interval.end_sample // per_frame)
        return FrameSpan(start, end)

    @staticmethod
    def frame_to_seconds(frame_index: int, clock: FrameClock) -> float:
        return frame_index / clock.frame_rate

    @staticmethod
    def frame_to_sample(frame_index: int, clock: FrameClock) -> int:
        return frame_index * clock.samples_per_frame

    @staticmethod
    def frame_count(timeline: ConversationTimeline) -> int:
        """Number of frames needed to cover every event."""
        end = timeline.end_sample
        if end <= 0:
            return 0
        return math.ceil(end / timeline.clock.samples_per_frame)

    @staticmethod
    def overlap_duration(a: SampleInterval, b: SampleInterval) -> int:
        return max(0, min(a.end_sample, b.end_sample) - max(a.start_sample, b.start_sample))

    @staticmethod
    def validate_timeline(timeline: ConversationTimeline) -> List[Violation]:
        """
        Report every invariant violation with the offending event indices.
        """
        violations: List[Violation] = []
        events = timeline.events

        for index, event in enumerate(events):
            if not event.interval.is_valid:
                violations.append(Violation(
                    VIOLATIONS["reversed"],
                    f"utterance [{event.start_sample}, {event.end_sample})",
                    (index,),
                ))
            previous_end = None
            for word_index, word in enumerate(event.words):
                if not word.interval.is_valid:
                    violations.append(Violation(
                        VIOLATIONS["reversed"],
                        f"word '{word.word}' [{word.interval.start_sample}, {word.interval.end_sample})",
                        (index,),
                    ))
                    continue
                if not event.interval.contains(word.interval):
                    violations.append(Violation(
                        VIOLATIONS["word_outside"],
                        f"word '{word.word}' lies outside its utterance",
                        (index,),
                    ))
                if previous_end is not None and word.interval.start_sample < previous_end:
                    violations.append(Violation(
                        VIOLATIONS["word_order"],
                        f"word {word_index} '{word.word}' overlaps or precedes the previous word",
                        (index,),
                    ))
                previous_end = word.interval.end_sample

        for channel in Channel:
            speech = [
                (i, e) for i, e in enumerate(events)
                if e.channel is channel and e.role is Role.SPEECH and e.interval.is_valid
            ]
            for a_pos, (i, first) in enumerate(speech):
                for j, second in speech[a_pos + 1:]:
                    if TimelineService.overlap_duration(first.interval, second.interval) > 0:
                        violations.append(Violation(
                            VIOLATIONS["speech_overlap"],
                            f"{channel.value} speech events overlap",
                            (i, j),
                        ))

        if violations:
            logger.debug(f"Timeline {timeline.session_id}: {len(violations)} violation(s)")
        return violations

    @staticmethod
    def ensure_valid(timeline: ConversationTimeline) -> ConversationTimeline:
        """Raise TimelineValidationError when the timeline breaks an invariant."""
        violations = TimelineService.validate_timeline(timeline)
        if violations:
            raise TimelineValidationError(timeline.session_id, violations)
        return timeline
