"""
Four-stage synthetic dialogue pipeline: script generation, timeline
construction, backchannel timing refinement and barge-in truncation.
"""
import logging
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import BACKCHANNEL_JITTER_MS, ERROR_MESSAGES
from ..errors import DuplexError
from ..models import (
    Channel, ConversationTimeline, FrameClock, Role, SampleInterval, UtteranceEvent, WordAlignment,
)
from ..timeline.services import TimelineService
from .augment import sample_snr_db
from .filters import TimelineFilter
from .models import (
    AugmentConfig, CorpusResult, DialogueScript, MockTts, ScenarioTemplate, TimelineLayout, Turn,
)
from .templates import TURN_TYPES, expand

logger = logging.getLogger(__name__)


def _overlap(a: UtteranceEvent, b: UtteranceEvent) -> int:
    return TimelineService.overlap_duration(a.interval, b.interval)


def _shift(event: UtteranceEvent, offset: int) -> UtteranceEvent:
    return replace(
        event,
        interval=event.interval.shifted(offset),
        words=tuple(replace(w, interval=w.interval.shifted(offset)) for w in event.words),
    )


def snap_cut(boundaries: Sequence[float], cut: float) -> float:
    """Nearest boundary to ``cut``; equidistant candidates resolve to the earlier one."""
    if not boundaries:
        return cut
    return min(boundaries, key=lambda b: (abs(b - cut), b))


class SynthService:
    """Service class for the synthetic dialogue pipeline."""

    @staticmethod
    def generate_dialogue(template: ScenarioTemplate, seed: int) -> DialogueScript:
        """
        Expand the template grammar into a turn script. User turns open new
        content tags; assistant speech carries the tag of the user turn it
        answers; backchannels carry their host's tag.
        """
        rng = np.random.default_rng(seed)
        grammar = template.grammar
        skeleton = expand(grammar, "<dialogue>", rng)
        if not skeleton:
            raise DuplexError(ERROR_MESSAGES["empty_script"])

        turns: List[Turn] = []
        counter = 0
        last_user: Optional[str] = None
        last_main: Dict[Channel, Optional[str]] = {Channel.USER: None, Channel.ASSISTANT: None}

        def fresh() -> str:
            nonlocal counter
            counter += 1
            return f"t{counter}"

        for kind in skeleton:
            speaker, role, symbol, marker = TURN_TYPES[kind]
            text = " ".join(expand(grammar, symbol, rng))
            if role is Role.BACKCHANNEL:
                tag = last_main[speaker.other] or fresh()
            elif speaker is Channel.USER:
                tag = last_user = fresh()
            elif kind == "ASSISTANT_GAME_PROMPT" or last_user is None:
                tag = fresh()
            else:
                tag = last_user
            if role is not Role.BACKCHANNEL:
                last_main[speaker] = tag
            turns.append(Turn(speaker=speaker, role=role, text=text, content_tag=tag, marker=marker))

        logger.debug(f"Generated {len(turns)} turns for {template.key} (seed {seed})")
        return DialogueScript(template=template.key, seed=seed, turns=tuple(turns))

    @staticmethod
    def _place(turn: Turn, start: int, spans_ms: List[Tuple[float, float]], clock: FrameClock) -> UtteranceEvent:
        words = tuple(
            WordAlignment(word, SampleInterval(start + clock.ms_to_samples(on), start + clock.ms_to_samples(off)))
            for word, (on, off) in zip(turn.words, spans_ms)
        )
        return UtteranceEvent(
            channel=turn.speaker,
            role=turn.role,
            interval=SampleInterval(start, words[-1].interval.end_sample),
            words=words,
            content_tag=turn.content_tag,
        )

    @staticmethod
    def construct_timeline(
        script: DialogueScript,
        tts: Optional[MockTts] = None,
        clock: Optional[FrameClock] = None,
        layout: Optional[TimelineLayout] = None,
        session_id: Optional[str] = None,
    ) -> ConversationTimeline:
        """
        Place turns on the 24 kHz sample axis. Main turns follow each other
        with ``turn_gap_ms`` between them; backchannels sit inside their host,
        interruptions cover the host's tail, simultaneous turns start shortly
        after the host does.
        """
        if not script.turns:
            raise DuplexError(ERROR_MESSAGES["empty_script"])
        tts = tts or MockTts()
        clock = clock or FrameClock()
        layout = layout or TimelineLayout()
        rng = np.random.default_rng([tts.seed, script.seed])
        gap = clock.ms_to_samples(layout.turn_gap_ms)

        events: List[UtteranceEvent] = []
        last_main: Dict[Channel, Optional[UtteranceEvent]] = {Channel.USER: None, Channel.ASSISTANT: None}
        pending_interrupt: Optional[UtteranceEvent] = None
        cursor = 0

        for turn in script.turns:
            spans = tts.layout_ms(turn.words, rng)
            duration = clock.ms_to_samples(spans[-1][1])
            host = last_main[turn.speaker.other]
            role = turn.role
            if host is None and role is not Role.SPEECH:
                start = cursor
            elif role is Role.BACKCHANNEL:
                center = host.start_sample + int(layout.backchannel_position * host.interval.duration)
                latest = max(host.start_sample, host.end_sample - duration)
                start = min(max(center - duration // 2, host.start_sample), latest)
            elif role is Role.INTERRUPT:
                start = max(host.start_sample + host.interval.duration // 2, host.end_sample - duration)
            elif role is Role.SIMULTANEOUS:
                offset = min(clock.ms_to_samples(layout.simultaneous_offset_ms), host.interval.duration // 2)
                start = host.start_sample + offset
            else:
                start = cursor
                if pending_interrupt is not None and turn.speaker is Channel.ASSISTANT:
                    delay = clock.ms_to_samples(layout.scoring_margin_ms + layout.response_delay_ms)
                    start = max(cursor, pending_interrupt.end_sample + delay)
                    pending_interrupt = None

            event = SynthService._place(turn, start, spans, clock)
            events.append(event)
            if role is not Role.BACKCHANNEL:
                last_main[turn.speaker] = event
            if role is Role.INTERRUPT and host is not None:
                pending_interrupt = event
            cursor = max(cursor, event.end_sample + gap)

        timeline = ConversationTimeline(
            session_id=session_id or f"{script.template.replace(':', '-')}-{script.seed}",
            clock=clock,
            events=tuple(events),
        )
        return TimelineService.ensure_valid(timeline)

    @staticmethod
    def _collides(event: UtteranceEvent, others: Sequence[UtteranceEvent], clearance: int) -> bool:
        return any(
            o.channel is event.channel
            and event.start_sample < o.end_sample + clearance
            and o.start_sample < event.end_sample + clearance
            for o in others
        )

    @staticmethod
    def refine_timing(timeline: ConversationTimeline, rng_seed: int, jitter_ms: float = BACKCHANNEL_JITTER_MS) -> ConversationTimeline:
        """
        Re-center each backchannel on its host with seeded jitter, keeping it
        inside the host and clear of same-channel speech. Backchannels with no
        overlapping host are dropped.
        """
        rng = np.random.default_rng(rng_seed)
        clock = timeline.clock
        clearance = clock.samples_per_frame
        mains = [e for e in timeline.events if e.role is not Role.BACKCHANNEL]
        placed: List[UtteranceEvent] = []
        refined: List[UtteranceEvent] = []

        for event in timeline.events:
            if event.role is not Role.BACKCHANNEL:
                refined.append(event)
                continue
            offset = clock.ms_to_samples(rng.uniform(-jitter_ms, jitter_ms))
            hosts = [h for h in mains if h.channel is event.channel.other and _overlap(h, event) > 0]
            if not hosts:
                logger.warning(f"Dropping backchannel at sample {event.start_sample} in {timeline.session_id}: no host")
                continue
            host = max(hosts, key=lambda h: (_overlap(h, event), -h.start_sample))
            duration = event.interval.duration
            center = (host.start_sample + host.end_sample) // 2 + offset
            latest = host.end_sample - duration
            start = host.start_sample if latest < host.start_sample else int(
                np.clip(center - duration // 2, host.start_sample, latest))
            moved = _shift(event, start - event.start_sample)

            neighbours = mains + placed
            if SynthService._collides(moved, neighbours, clearance):
                if SynthService._collides(event, neighbours, clearance):
                    logger.warning(f"Dropping backchannel at sample {event.start_sample} in {timeline.session_id}: no room")
                    continue
                moved = event
            placed.append(moved)
            refined.append(moved)

        return TimelineService.ensure_valid(replace(timeline, events=tuple(refined)))

    @staticmethod
    def truncate_barge_in(
        timeline: ConversationTimeline,
        rng_seed: int,
        diagnostics: Optional[List[str]] = None,
    ) -> ConversationTimeline:
        """
        Cut each interrupted assistant utterance at a seeded point between the
        interruption onset and the utterance end, snapped to the nearest word
        end after the onset or to the utterance end. Later words are dropped;
        snapping to the utterance end keeps it whole.
        """
        rng = np.random.default_rng(rng_seed)
        events = list(timeline.events)
        for interrupt in [e for e in events if e.channel is Channel.USER and e.role is Role.INTERRUPT]:
            hosts = [
                (i, e) for i, e in enumerate(events)
                if e.channel is Channel.ASSISTANT and e.role is Role.SPEECH and _overlap(e, interrupt) > 0
            ]
            if not hosts:
                message = f"interrupt at sample {interrupt.start_sample} overlaps no assistant utterance"
                logger.warning(f"{timeline.session_id}: {message}")
                if diagnostics is not None:
                    diagnostics.append(message)
                continue
            index, host = max(hosts, key=lambda item: (_overlap(item[1], interrupt), -item[0]))
            cut = int(rng.integers(interrupt.start_sample, host.end_sample))
            boundaries = sorted(
                {w.interval.end_sample for w in host.words if w.interval.end_sample > interrupt.start_sample}
                | {host.end_sample}
            )
            end = snap_cut(boundaries, cut)
            if end == host.end_sample:
                logger.debug(f"{timeline.session_id}: cut at sample {cut} keeps the assistant utterance whole")
                continue
            words = tuple(w for w in host.words if w.interval.end_sample <= end)
            events[index] = replace(host, interval=SampleInterval(host.start_sample, end), words=words)
            logger.debug(f"{timeline.session_id}: truncated assistant utterance at sample {end} ({len(words)} words kept)")
        return TimelineService.ensure_valid(replace(timeline, events=tuple(events)))

    @staticmethod
    def generate_corpus(
        templates: Sequence[ScenarioTemplate],
        n: int,
        seed: int,
        tts: Optional[MockTts] = None,
        layout: Optional[TimelineLayout] = None,
        augment: Optional[AugmentConfig] = None,
        clock: Optional[FrameClock] = None,
    ) -> CorpusResult:
        """Run every stage for ``n`` sessions and collect kept timelines plus a manifest."""
        tts = tts or MockTts()
        layout = layout or TimelineLayout()
        augment = augment or AugmentConfig()
        clock = clock or FrameClock()
        rng = np.random.default_rng(seed)
        session_seeds = rng.integers(0, 2 ** 31 - 1, size=n)
        picks = rng.integers(0, len(templates), size=n)
        timeline_filter = TimelineFilter(tts)

        result = CorpusResult()
        sessions, filtered = [], {}
        for i in range(n):
            template = templates[int(picks[i])]
            session_seed = int(session_seeds[i])
            session_id = f"{template.key.replace(':', '-')}-{i:05d}"
            script = SynthService.generate_dialogue(template, session_seed)
            timeline = SynthService.construct_timeline(
                script, replace(tts, seed=session_seed), clock, layout, session_id=session_id)
            timeline = SynthService.refine_timing(timeline, session_seed + 1)
            diagnostics: List[str] = []
            if any(e.role is Role.INTERRUPT for e in timeline.events):
                timeline = SynthService.truncate_barge_in(timeline, session_seed + 2, diagnostics)
            kept, reasons = timeline_filter.filter_timeline(timeline)
            for reason in reasons:
                filtered[reason] = filtered.get(reason, 0) + 1
            if kept:
                result.timelines.append(timeline)
            sessions.append({
                "session_id": session_id,
                "template": template.key,
                "seed": session_seed,
                "snr_db": round(sample_snr_db(np.random.default_rng(session_seed), augment), 6),
                "kept": kept,
                "reasons": reasons,
                "diagnostics": diagnostics,
            })

        result.manifest = {
            "seed": seed,
            "requested": n,
            "kept": len(result.timelines),
            "families": sorted({t.family.value for t in templates}),
            "templates": sorted({t.key for t in templates}),
            "specificity": sorted({t.specificity.value for t in templates}),
            "flow": sorted({t.flow.value for t in templates}),
            "interactions": sorted({i.value for t in templates for i in t.interactions}),
            "tts": {
                "base_ms": tts.base_ms, "per_char_ms": tts.per_char_ms, "gap_ms": tts.gap_ms,
                "jitter": tts.jitter, "min_onset_spacing_ms": tts.min_onset_spacing_ms,
            },
            "layout": {
                "turn_gap_ms": layout.turn_gap_ms, "response_delay_ms": layout.response_delay_ms,
                "scoring_margin_ms": layout.scoring_margin_ms,
            },
            "snr_db_range": [augment.snr_db_min, augment.snr_db_max],
            "filtered": dict(sorted(filtered.items())),
            "sessions": sessions,
        }
        logger.info(f"Generated {len(result.timelines)} of {n} timelines (seed {seed})")
        return result
