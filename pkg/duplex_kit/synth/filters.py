import hashlib
import json
import logging
from typing import List, Optional, Set

from ..constants import AUDIO_TRANSCRIPT_RATIO, FILTER_REASONS
from ..models import ConversationTimeline, Role
from ..timeline.services import TimelineService
from .models import FilterResult, MockTts

logger = logging.getLogger(__name__)


def canonical_hash(timeline: ConversationTimeline) -> str:
    """sha256 of the timeline record with the session id left out."""
    from ..schemas import TimelineSchema

    record = TimelineSchema().dump(timeline)
    record.pop("session_id", None)
    payload = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class TimelineFilter:
    """
    Quality filter over a stream of timelines. Keeps the hashes it has seen,
    so one instance should see a whole corpus.
    """

    def __init__(self, tts: Optional[MockTts] = None, ratio: float = AUDIO_TRANSCRIPT_RATIO):
        self.tts = tts or MockTts()
        self.ratio = ratio
        self.seen: Set[str] = set()

    def filter_timeline(self, timeline: ConversationTimeline) -> FilterResult:
        reasons: List[str] = []

        for event in timeline.events:
            expected = timeline.clock.ms_to_samples(self.tts.expected_duration_ms(event.text))
            if event.interval.duration > self.ratio * expected:
                reasons.append(FILTER_REASONS["ratio"])
                break

        for event in timeline.events:
            if event.role is not Role.BACKCHANNEL:
                continue
            others = timeline.channel_events(event.channel.other)
            if not any(TimelineService.overlap_duration(event.interval, o.interval) > 0 for o in others):
                reasons.append(FILTER_REASONS["backchannel"])
                break

        digest = canonical_hash(timeline)
        if digest in self.seen:
            reasons.append(FILTER_REASONS["duplicate"])
        self.seen.add(digest)

        if reasons:
            logger.warning(f"Filtered timeline {timeline.session_id}: {', '.join(reasons)}")
        return FilterResult(kept=not reasons, reasons=tuple(reasons))
