"""
Offline full-duplex metrics: takeovers, backchannel statistics, latencies
and behaviour labels, computed from session logs against the ground-truth
timelines the sessions were driven by.
"""
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..constants import ERROR_MESSAGES, REPORT_DECIMALS
from ..errors import DistributionError, DuplexError, EmptySampleError, ReportWriteError
from ..engine.models import SessionLog
from ..models import Channel, ConversationTimeline, Role, SampleInterval, UtteranceEvent
from .models import (
    BehaviorLabel, EvalConfig, MetricReport, SampleResult, Scenario, ScenarioAnchors, Segment,
)

logger = logging.getLogger(__name__)

_OPEN_END = 2 ** 62
_USER_SPEECH = (Role.SPEECH, Role.INTERRUPT, Role.SIMULTANEOUS)


class EvalService:
    """Service class for full-duplex evaluation."""

    @staticmethod
    def segments(session: SessionLog) -> List[Segment]:
        return [
            Segment(
                start_sample=e.start_sample,
                end_sample=e.end_sample,
                word_count=len(e.words),
                opener="BC" if e.role is Role.BACKCHANNEL else "BOW",
                content_tag=e.content_tag,
            )
            for e in sorted(session.assistant_events, key=lambda e: e.start_sample)
        ]

    @staticmethod
    def is_takeover(segment: Segment, sample_rate: int, cfg: EvalConfig) -> bool:
        long_enough = (segment.end_sample - segment.start_sample) / sample_rate >= cfg.takeover_min_seconds
        wordy = segment.word_count >= cfg.takeover_min_words
        if cfg.takeover_rule == "and":
            return long_enough and wordy
        return long_enough or wordy

    @staticmethod
    def detect_takeovers(
        session: SessionLog,
        cfg: Optional[EvalConfig] = None,
        window: Optional[SampleInterval] = None,
    ) -> List[Segment]:
        """Speaking segments that claim the floor, optionally only those starting inside ``window``."""
        cfg = cfg or EvalConfig()
        rate = session.clock.sample_rate
        return [
            s for s in EvalService.segments(session)
            if EvalService.is_takeover(s, rate, cfg) and (window is None or window.contains_sample(s.start_sample))
        ]

    @staticmethod
    def takeover_rate(flags: Sequence[bool]) -> float:
        if not flags:
            raise EmptySampleError()
        return sum(bool(f) for f in flags) / len(flags)

    @staticmethod
    def compute_tor(
        samples: Sequence[Tuple[SessionLog, Optional[SampleInterval]]],
        cfg: Optional[EvalConfig] = None,
    ) -> float:
        """Fraction of samples with at least one takeover inside their scored window."""
        return EvalService.takeover_rate(
            [bool(EvalService.detect_takeovers(session, cfg, window)) for session, window in samples])

    @staticmethod
    def position_histogram(positions: Sequence[float], cfg: Optional[EvalConfig] = None) -> np.ndarray:
        """Relative positions in [0, 1] binned uniformly, with additive smoothing."""
        cfg = cfg or EvalConfig()
        counts = np.zeros(cfg.jsd_bins, dtype=np.float64)
        if len(positions):
            bins = np.clip(np.floor(np.asarray(positions, dtype=np.float64) * cfg.jsd_bins), 0, cfg.jsd_bins - 1)
            np.add.at(counts, bins.astype(int), 1.0)
        return (counts + cfg.jsd_smoothing) / (counts.sum() + cfg.jsd_smoothing * cfg.jsd_bins)

    @staticmethod
    def relative_position(sample: int, events: Sequence[UtteranceEvent]) -> Optional[float]:
        """Position of ``sample`` inside the user utterance that contains it."""
        for event in events:
            if event.interval.contains_sample(sample):
                return (sample - event.start_sample) / event.interval.duration
        return None

    @staticmethod
    def _user_speech(timeline: Optional[ConversationTimeline]) -> List[UtteranceEvent]:
        if timeline is None:
            return []
        return [e for e in timeline.channel_events(Channel.USER) if e.role in _USER_SPEECH]

    @staticmethod
    def _backchannels(session: SessionLog, cfg: EvalConfig) -> List[Segment]:
        rate = session.clock.sample_rate
        return [
            s for s in EvalService.segments(session)
            if s.opener == "BC" and not EvalService.is_takeover(s, rate, cfg)
        ]

    @staticmethod
    def backchannel_stats(
        sessions: Sequence[SessionLog],
        cfg: Optional[EvalConfig] = None,
        timelines: Optional[Mapping[str, ConversationTimeline]] = None,
    ) -> Tuple[float, np.ndarray]:
        """
        Backchannels per sample and the smoothed histogram of where they
        start inside the concurrent user utterance.
        """
        if not sessions:
            raise EmptySampleError()
        cfg = cfg or EvalConfig()
        timelines = timelines or {}
        count, positions = 0, []
        for session in sessions:
            users = EvalService._user_speech(timelines.get(session.session_id))
            for segment in EvalService._backchannels(session, cfg):
                count += 1
                position = EvalService.relative_position(segment.start_sample, users)
                if position is not None:
                    positions.append(position)
        return count / len(sessions), EvalService.position_histogram(positions, cfg)

    @staticmethod
    def reference_histogram(timelines: Sequence[ConversationTimeline], cfg: Optional[EvalConfig] = None) -> np.ndarray:
        """Human timing: assistant backchannels of the ground-truth timelines."""
        cfg = cfg or EvalConfig()
        positions = []
        for timeline in timelines:
            users = EvalService._user_speech(timeline)
            for event in timeline.channel_events(Channel.ASSISTANT):
                if event.role is Role.BACKCHANNEL:
                    position = EvalService.relative_position(event.start_sample, users)
                    if position is not None:
                        positions.append(position)
        return EvalService.position_histogram(positions, cfg)

    @staticmethod
    def jsd(p, q) -> float:
        """Base-2 Jensen-Shannon divergence, in [0, 1]."""
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if p.shape != q.shape:
            raise DistributionError(ERROR_MESSAGES["length_mismatch"].format(p=p.size, q=q.size))
        for vector in (p, q):
            total = float(vector.sum())
            if abs(total - 1.0) > 1e-9 or np.any(vector < 0):
                raise DistributionError(total=total)
        m = 0.5 * (p + q)

        def kl(a: np.ndarray) -> float:
            mask = a > 0
            return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

        return float(np.clip(0.5 * kl(p) + 0.5 * kl(q), 0.0, 1.0))

    @staticmethod
    def compute_latencies(
        session: SessionLog,
        anchor_sample: int,
        cfg: Optional[EvalConfig] = None,
        mode: str = "response",
        search_from: Optional[int] = None,
    ) -> Optional[float]:
        """
        ``response``: seconds from anchor plus margin to the onset of the
        first segment starting at or after ``search_from`` (default: the
        anchor). ``stop``: seconds from the anchor to the end of the segment
        active at it. Negative values clip to 0; None when undefined.
        """
        cfg = cfg or EvalConfig()
        rate = session.clock.sample_rate
        segments = EvalService.segments(session)
        if mode == "stop":
            active = next((s for s in segments if s.interval.contains_sample(anchor_sample)), None)
            if active is None:
                return None
            return max(0.0, (active.end_sample - anchor_sample) / rate)
        if mode != "response":
            raise DuplexError(ERROR_MESSAGES["invalid_config"].format(reason=f"unknown latency mode '{mode}'"))
        start = anchor_sample if search_from is None else search_from
        following = next((s for s in segments if s.start_sample >= start), None)
        if following is None:
            return None
        scored_from = anchor_sample + cfg.post_anchor_margin_seconds * rate
        return max(0.0, (following.start_sample - scored_from) / rate)

    @staticmethod
    def conditional_mean(values: Sequence[Optional[float]]) -> Tuple[Optional[float], int, int]:
        """(mean over defined values, n defined, N total)."""
        defined = [v for v in values if v is not None]
        mean = float(np.mean(defined)) if defined else None
        return mean, len(defined), len(values)

    @staticmethod
    def classify_behavior(
        session: SessionLog,
        overlap: SampleInterval,
        pre_overlap_tag: str,
        overlap_tag: str,
    ) -> BehaviorLabel:
        following = next((s for s in EvalService.segments(session) if s.start_sample >= overlap.start_sample), None)
        if following is None:
            return BehaviorLabel.UNKNOWN
        if overlap_tag and following.content_tag == overlap_tag:
            return BehaviorLabel.RESPOND
        if pre_overlap_tag and following.content_tag == pre_overlap_tag:
            return BehaviorLabel.RESUME
        return BehaviorLabel.UNCERTAIN

    @staticmethod
    def _overlap_event(timeline: ConversationTimeline, scenario: Scenario) -> Optional[UtteranceEvent]:
        users = timeline.channel_events(Channel.USER)
        assistant = [e for e in timeline.channel_events(Channel.ASSISTANT) if e.role is not Role.BACKCHANNEL]
        wanted = {
            Scenario.USER_INTERRUPTION: (Role.INTERRUPT,),
            Scenario.USER_BACKCHANNEL: (Role.BACKCHANNEL,),
        }.get(scenario, (Role.SIMULTANEOUS, Role.SPEECH))
        for role in wanted:
            for event in users:
                if event.role is role and any(event.interval.start_sample < a.end_sample and
                                              a.start_sample < event.end_sample for a in assistant):
                    return event
        return None

    @staticmethod
    def anchors_for(timeline: ConversationTimeline, scenario: Scenario) -> ScenarioAnchors:
        """Scored window and latency anchors of one sample."""
        scenario = Scenario(scenario)
        users = EvalService._user_speech(timeline)
        if scenario in (Scenario.PAUSE_HANDLING, Scenario.BACKCHANNEL):
            if not users:
                return ScenarioAnchors(window=SampleInterval(0, _OPEN_END))
            return ScenarioAnchors(window=SampleInterval(
                min(e.start_sample for e in users), max(e.end_sample for e in users)))
        if scenario is Scenario.SMOOTH_TURN_TAKING:
            last = max((e.end_sample for e in users), default=0)
            return ScenarioAnchors(window=SampleInterval(last, _OPEN_END), response_anchor=last, search_from=last)

        event = EvalService._overlap_event(timeline, scenario)
        if event is None:
            logger.warning(f"{timeline.session_id}: no overlap event for {scenario.value}")
            return ScenarioAnchors(window=SampleInterval(0, _OPEN_END))
        onset = event.start_sample
        assistant = [e for e in timeline.channel_events(Channel.ASSISTANT)
                     if e.role is not Role.BACKCHANNEL and e.start_sample <= onset]
        host = max(assistant, key=lambda e: e.start_sample, default=None)
        return ScenarioAnchors(
            window=SampleInterval(onset, _OPEN_END),
            stop_anchor=onset,
            response_anchor=event.end_sample,
            search_from=onset,
            overlap=event.interval,
            pre_overlap_tag=host.content_tag if host is not None else "",
            overlap_tag=event.content_tag,
        )

    @staticmethod
    def evaluate_sample(
        session: SessionLog,
        timeline: ConversationTimeline,
        scenario: Scenario,
        cfg: Optional[EvalConfig] = None,
    ) -> SampleResult:
        cfg = cfg or EvalConfig()
        scenario = Scenario(scenario)
        anchors = EvalService.anchors_for(timeline, scenario)
        users = EvalService._user_speech(timeline)
        backchannels = EvalService._backchannels(session, cfg)
        positions = [EvalService.relative_position(s.start_sample, users) for s in backchannels]

        stop = response = None
        if anchors.stop_anchor is not None:
            stop = EvalService.compute_latencies(session, anchors.stop_anchor, cfg, "stop")
        if anchors.response_anchor is not None:
            response = EvalService.compute_latencies(
                session, anchors.response_anchor, cfg, "response", search_from=anchors.search_from)
        behavior = BehaviorLabel.UNKNOWN
        if scenario.is_overlap and anchors.overlap is not None:
            behavior = EvalService.classify_behavior(
                session, anchors.overlap, anchors.pre_overlap_tag, anchors.overlap_tag)

        return SampleResult(
            session_id=session.session_id,
            scenario=scenario,
            takeover=bool(EvalService.detect_takeovers(session, cfg, anchors.window)),
            backchannel_count=len(backchannels),
            backchannel_positions=tuple(p for p in positions if p is not None),
            stop_latency=stop,
            response_latency=response,
            behavior=behavior,
            coercions=session.coercion_count,
        )

    @staticmethod
    def behavior_distribution(labels: Sequence[BehaviorLabel]) -> Dict[str, float]:
        total = len(labels)
        return {
            label.value.lower(): (sum(1 for l in labels if l is label) / total if total else 0.0)
            for label in BehaviorLabel
        }

    @staticmethod
    def aggregate_report(
        results: Sequence[SampleResult],
        scenario: str,
        cfg: Optional[EvalConfig] = None,
        reference: Optional[np.ndarray] = None,
    ) -> MetricReport:
        """
        Fold per-sample results into one report. Without a reference
        histogram the backchannel JSD is taken against the uniform one.
        """
        if not results:
            raise EmptySampleError()
        cfg = cfg or EvalConfig()
        total = len(results)
        histogram = EvalService.position_histogram([p for r in results for p in r.backchannel_positions], cfg)
        if reference is None:
            reference = np.full(cfg.jsd_bins, 1.0 / cfg.jsd_bins)
        stop_mean, stop_n, _ = EvalService.conditional_mean([r.stop_latency for r in results])
        response_mean, response_n, _ = EvalService.conditional_mean([r.response_latency for r in results])
        return MetricReport(
            scenario=Scenario(scenario).value if scenario in Scenario._value2member_map_ else str(scenario),
            total_n=total,
            tor=EvalService.takeover_rate([r.takeover for r in results]),
            backchannel_freq=sum(r.backchannel_count for r in results) / total,
            jsd=EvalService.jsd(histogram, reference),
            behavior_distribution=EvalService.behavior_distribution([r.behavior for r in results]),
            stop_latency_mean=stop_mean,
            stop_n=stop_n,
            response_latency_mean=response_mean,
            response_n=response_n,
            coercion_count=sum(r.coercions for r in results),
        )

    @staticmethod
    def evaluate_corpus(
        sessions: Sequence[SessionLog],
        timelines: Mapping[str, ConversationTimeline],
        scenario: Scenario,
        cfg: Optional[EvalConfig] = None,
    ) -> MetricReport:
        cfg = cfg or EvalConfig()
        results = []
        for session in sessions:
            timeline = timelines.get(session.session_id)
            if timeline is None:
                raise DuplexError(ERROR_MESSAGES["missing_timeline"].format(session_id=session.session_id))
            results.append(EvalService.evaluate_sample(session, timeline, scenario, cfg))
        reference = EvalService.reference_histogram(list(timelines.values()), cfg)
        report = EvalService.aggregate_report(results, Scenario(scenario).value, cfg, reference)
        logger.info(f"Evaluated {report.total_n} sample(s) for {report.scenario}: TOR {report.tor:.3f}")
        return report

    @staticmethod
    def suite_average(scores: Sequence[float]) -> float:
        """Unweighted mean of sub-benchmark scores."""
        if not scores:
            raise EmptySampleError()
        return float(np.mean(scores))

    @staticmethod
    def report_to_dict(report: MetricReport) -> dict:
        from ..schemas import ReportSchema

        return ReportSchema().dump(report)

    @staticmethod
    def report_from_dict(data: dict) -> MetricReport:
        from ..schemas import ReportSchema

        return ReportSchema().load(data)

    @staticmethod
    def write_report(report: MetricReport, path: str) -> None:
        """Atomic write of the report JSON."""
        from ..io import write_json_atomic

        try:
            write_json_atomic(path, EvalService.report_to_dict(report), decimals=REPORT_DECIMALS)
        except OSError as exc:
            raise ReportWriteError(path=path, reason=exc.strerror or exc) from exc
        logger.info(f"Wrote report for {report.scenario} to {path}")

    @staticmethod
    def read_report(path: str) -> MetricReport:
        from ..io import read_json

        return EvalService.report_from_dict(read_json(path))
