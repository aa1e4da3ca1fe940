import json

import numpy as np
import pytest
from marshmallow import ValidationError

from duplex_kit.engine import SessionLog
from duplex_kit.errors import DistributionError, DuplexError, EmptySampleError
from duplex_kit.evaluation import (
    BehaviorLabel, EvalConfig, EvalService, MetricReport, SampleResult, Scenario, Segment,
)
from duplex_kit.models import Channel, FrameClock, Role, SampleInterval, UtteranceEvent
from duplex_kit.schemas import EvalConfigSchema, ReportSchema

RATE = 24000
SPF = 1920


def session(*events, session_id="s1", coercions=()):
    return SessionLog(session_id=session_id, clock=FrameClock(), events=events, coercions=coercions)


def seconds(value):
    return int(value * RATE)


@pytest.fixture
def interruption(make_timeline, make_utterance):
    """Assistant answers at length, the user interrupts at frame 4."""
    return make_timeline(
        make_utterance("assistant", "speech", 0, ["a", "b", "c", "d"], tag="t1"),
        make_utterance("user", "interrupt", 4, ["wait"], tag="t2"),
    )


@pytest.fixture
def responsive_session(make_utterance):
    """Assistant stops at frame 6 and answers the interruption at frame 16."""
    return session(
        make_utterance("assistant", "speech", 0, ["a", "b"], tag="t1"),
        make_utterance("assistant", "speech", 16, ["x", "y", "z", "u", "v"], frames_per_word=2, tag="t2"),
    )


class TestTakeovers:
    """Test cases for takeover detection and TOR."""

    def test_or_rule(self):
        """Test either duration or word count is enough by default."""
        cfg = EvalConfig()
        assert EvalService.is_takeover(Segment(0, seconds(1.5), 1, "BOW"), RATE, cfg)
        assert EvalService.is_takeover(Segment(0, seconds(0.5), 5, "BOW"), RATE, cfg)
        assert not EvalService.is_takeover(Segment(0, seconds(1.0), 4, "BOW"), RATE, cfg)

    def test_and_rule(self):
        """Test the conjunctive rule needs both thresholds."""
        cfg = EvalConfig(takeover_rule="and")
        assert not EvalService.is_takeover(Segment(0, seconds(1.5), 1, "BOW"), RATE, cfg)
        assert EvalService.is_takeover(Segment(0, seconds(1.5), 5, "BOW"), RATE, cfg)

    def test_rate(self):
        """Test 196 takeovers in 200 samples."""
        assert EvalService.takeover_rate([True] * 196 + [False] * 4) == pytest.approx(0.98)
        with pytest.raises(EmptySampleError):
            EvalService.takeover_rate([])

    def test_window_filters_segments(self, responsive_session):
        """Test only segments starting inside the window count."""
        window = SampleInterval(10 * SPF, 2 ** 40)
        found = EvalService.detect_takeovers(responsive_session, window=window)
        assert [s.start_sample for s in found] == [16 * SPF]
        assert EvalService.compute_tor([(responsive_session, window), (session(), None)]) == 0.5

    def test_segments(self, responsive_session, make_utterance):
        """Test segments report word counts and openers."""
        bc = session(make_utterance("assistant", "backchannel", 2, ["mm"]))
        assert EvalService.segments(bc) == [Segment(2 * SPF, 5 * SPF, 1, "BC")]
        assert [s.word_count for s in EvalService.segments(responsive_session)] == [2, 5]


class TestDistributions:
    """Test cases for histograms and JSD."""

    def test_jsd_known_value(self):
        """Test JSD of a fair coin against a certain outcome."""
        assert EvalService.jsd([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.311278, abs=1e-6)

    def test_jsd_bounds(self):
        """Test identical distributions score 0 and disjoint ones 1."""
        assert EvalService.jsd([0.2, 0.8], [0.2, 0.8]) == pytest.approx(0.0)
        assert EvalService.jsd([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_jsd_rejects_bad_input(self):
        """Test shape and normalization errors."""
        with pytest.raises(DistributionError):
            EvalService.jsd([0.5, 0.5], [1.0, 0.0, 0.0])
        with pytest.raises(DistributionError):
            EvalService.jsd([0.5, 0.6], [0.5, 0.5])
        with pytest.raises(DistributionError):
            EvalService.jsd([1.5, -0.5], [0.5, 0.5])

    def test_histogram_binning(self):
        """Test positions bin uniformly and 1.0 falls in the last bin."""
        hist = EvalService.position_histogram([0.0, 0.05, 0.95, 1.0])
        assert hist.sum() == pytest.approx(1.0)
        assert hist[0] == pytest.approx(0.5)
        assert hist[9] == pytest.approx(0.5)
        assert hist[5] == pytest.approx(0.0, abs=1e-8)

    def test_empty_histogram_is_uniform(self):
        """Test no positions give the uniform distribution."""
        np.testing.assert_allclose(EvalService.position_histogram([]), np.full(10, 0.1))

    def test_backchannel_stats(self, make_timeline, make_utterance):
        """Test frequency per sample and position inside the user turn."""
        tl = make_timeline(make_utterance("user", "speech", 0, ["a", "b"]), session_id="a")
        with_bc = session(make_utterance("assistant", "backchannel", 3, ["mm"], frames_per_word=1), session_id="a")
        freq, hist = EvalService.backchannel_stats([with_bc, session(session_id="b")], timelines={"a": tl})
        assert freq == 0.5
        assert int(np.argmax(hist)) == 5

    def test_reference_histogram(self, make_timeline, make_utterance):
        """Test the human reference uses assistant backchannels of the timelines."""
        tl = make_timeline(
            make_utterance("user", "speech", 0, ["a", "b", "c", "d", "e"], frames_per_word=2),
            make_utterance("assistant", "backchannel", 8, ["mm"], frames_per_word=1),
        )
        hist = EvalService.reference_histogram([tl])
        assert int(np.argmax(hist)) == 8


class TestLatencies:
    """Test cases for stop and response latency."""

    @pytest.fixture
    def long_turn(self):
        return session(
            UtteranceEvent(Channel.ASSISTANT, Role.SPEECH, SampleInterval(seconds(1.0), seconds(3.0))),
            UtteranceEvent(Channel.ASSISTANT, Role.SPEECH, SampleInterval(seconds(4.0), seconds(4.5))),
        )

    def test_stop(self, long_turn):
        """Test stop latency runs from the anchor to the end of the active segment."""
        assert EvalService.compute_latencies(long_turn, seconds(2.0), mode="stop") == pytest.approx(1.0)
        assert EvalService.compute_latencies(long_turn, seconds(3.5), mode="stop") is None

    def test_response(self, long_turn):
        """Test response latency is measured past the margin."""
        assert EvalService.compute_latencies(long_turn, seconds(3.0)) == pytest.approx(0.5)
        assert EvalService.compute_latencies(long_turn, seconds(3.8)) == 0.0
        assert EvalService.compute_latencies(long_turn, seconds(4.2)) is None

    def test_response_search_from(self, long_turn):
        """Test an earlier search start can pick a segment before the anchor."""
        value = EvalService.compute_latencies(long_turn, seconds(2.0), search_from=seconds(0.5))
        assert value == 0.0

    def test_unknown_mode(self, long_turn):
        """Test only stop and response modes exist."""
        with pytest.raises(DuplexError):
            EvalService.compute_latencies(long_turn, 0, mode="bogus")

    def test_conditional_mean(self):
        """Test undefined values are excluded but counted in N."""
        assert EvalService.conditional_mean([1.0, None, 3.0]) == (2.0, 2, 3)
        assert EvalService.conditional_mean([None, None]) == (None, 0, 2)
        mean, n, total = EvalService.conditional_mean([0.2, None, 0.4])
        assert mean == pytest.approx(0.3)
        assert (n, total) == (2, 3)


class TestBehavior:
    """Test cases for overlap behaviour labels."""

    def test_labels(self, make_utterance):
        """Test the label follows the tag of the first segment after the onset."""
        overlap = SampleInterval(4 * SPF, 7 * SPF)
        respond = session(make_utterance("assistant", "speech", 10, ["x"], tag="new"))
        resume = session(make_utterance("assistant", "speech", 10, ["x"], tag="old"))
        other = session(make_utterance("assistant", "speech", 10, ["x"], tag="else"))
        assert EvalService.classify_behavior(respond, overlap, "old", "new") is BehaviorLabel.RESPOND
        assert EvalService.classify_behavior(resume, overlap, "old", "new") is BehaviorLabel.RESUME
        assert EvalService.classify_behavior(other, overlap, "old", "new") is BehaviorLabel.UNCERTAIN
        assert EvalService.classify_behavior(session(), overlap, "old", "new") is BehaviorLabel.UNKNOWN

    def test_distribution_counts(self, behavior_rows):
        """Test 1/9/0/88 of 98 labels reproduce the reference row."""
        labels = (
            [BehaviorLabel.RESPOND] * 1 + [BehaviorLabel.RESUME] * 9 + [BehaviorLabel.UNKNOWN] * 88
        )
        dist = EvalService.behavior_distribution(labels)
        row = behavior_rows["user_backchannel"][0]
        assert {k: round(v, 3) for k, v in dist.items()} == {
            k: row[k] for k in ("respond", "resume", "uncertain", "unknown")
        }

    def test_reference_rows_are_distributions(self, behavior_rows):
        """Test every reference row sums to one and loads as a report."""
        schema = ReportSchema()
        for scenario, rows in behavior_rows.items():
            for row in rows:
                behavior = {k: row[k] for k in ("respond", "resume", "uncertain", "unknown")}
                assert sum(behavior.values()) == pytest.approx(1.0, abs=1e-3)
                report = schema.load({
                    "scenario": scenario, "N": 100, "tor": 0.5, "bc_freq": 0.0, "jsd": 0.0,
                    "behavior": behavior,
                    "stop_latency": {"mean": None, "n": 0},
                    "response_latency": {"mean": 0.5, "n": 10},
                    "coercions": 0,
                })
                assert report.behavior_distribution == behavior

    def test_suite_average(self, suite_scores):
        """Test the unweighted suite mean."""
        assert round(EvalService.suite_average(suite_scores["scores"]), 2) == suite_scores["average"]
        with pytest.raises(EmptySampleError):
            EvalService.suite_average([])


class TestScenarioEvaluation:
    """Test cases for anchors, per-sample results and reports."""

    def test_interruption_anchors(self, interruption):
        """Test the overlap anchors come from the interruption."""
        anchors = EvalService.anchors_for(interruption, Scenario.USER_INTERRUPTION)
        assert anchors.stop_anchor == 4 * SPF
        assert anchors.response_anchor == 7 * SPF
        assert anchors.search_from == 4 * SPF
        assert anchors.pre_overlap_tag == "t1"
        assert anchors.overlap_tag == "t2"
        assert anchors.window.start_sample == 4 * SPF

    def test_pause_and_turn_taking_anchors(self, dialogue_timeline):
        """Test non-overlap scenarios score the user turn or what follows it."""
        pause = EvalService.anchors_for(dialogue_timeline, Scenario.PAUSE_HANDLING)
        assert pause.window == SampleInterval(0, 6 * SPF)
        turn = EvalService.anchors_for(dialogue_timeline, Scenario.SMOOTH_TURN_TAKING)
        assert turn.response_anchor == 6 * SPF
        assert turn.stop_anchor is None

    def test_missing_overlap_event(self, dialogue_timeline):
        """Test a sample without the scenario's overlap gets an open window."""
        anchors = EvalService.anchors_for(dialogue_timeline, Scenario.USER_INTERRUPTION)
        assert anchors.overlap is None
        assert anchors.window.start_sample == 0

    def test_user_backchannel_anchor(self, dialogue_timeline):
        """Test the user backchannel scenario anchors on the backchannel."""
        anchors = EvalService.anchors_for(dialogue_timeline, Scenario.USER_BACKCHANNEL)
        assert anchors.stop_anchor == 10 * SPF
        assert anchors.overlap_tag == "t1"

    def test_evaluate_sample(self, interruption, responsive_session):
        """Test a stop-then-answer session is scored as a response."""
        result = EvalService.evaluate_sample(responsive_session, interruption, Scenario.USER_INTERRUPTION)
        assert result.takeover
        assert result.stop_latency == pytest.approx(2 * SPF / RATE)
        assert result.response_latency == pytest.approx((16 * SPF - 7 * SPF - 12000) / RATE)
        assert result.behavior is BehaviorLabel.RESPOND

    def test_aggregate(self):
        """Test per-sample results fold into a report."""
        results = [
            SampleResult("a", Scenario.USER_INTERRUPTION, True, stop_latency=0.2, behavior=BehaviorLabel.RESPOND),
            SampleResult("b", Scenario.USER_INTERRUPTION, False, response_latency=0.4, coercions=2),
        ]
        report = EvalService.aggregate_report(results, "user_interruption")
        assert report.total_n == 2
        assert report.tor == 0.5
        assert report.stop_latency_mean == pytest.approx(0.2) and report.stop_n == 1
        assert report.response_n == 1
        assert report.behavior_distribution == {"respond": 0.5, "resume": 0.0, "uncertain": 0.0, "unknown": 0.5}
        assert report.jsd == pytest.approx(0.0, abs=1e-9)
        assert report.coercion_count == 2
        with pytest.raises(EmptySampleError):
            EvalService.aggregate_report([], "user_interruption")

    def test_corpus_needs_timelines(self, responsive_session):
        """Test every session must have its ground-truth timeline."""
        with pytest.raises(DuplexError):
            EvalService.evaluate_corpus([responsive_session], {}, Scenario.USER_INTERRUPTION)


class TestReportJson:
    """Test cases for the report file."""

    @pytest.fixture
    def report(self):
        return MetricReport(
            scenario="user_interruption",
            total_n=3,
            tor=0.333333,
            backchannel_freq=1.5,
            jsd=0.123457,
            behavior_distribution={"respond": 0.666667, "resume": 0.333333, "uncertain": 0.0, "unknown": 0.0},
            stop_latency_mean=None,
            stop_n=0,
            response_latency_mean=0.22,
            response_n=2,
            coercion_count=1,
        )

    def test_round_trip(self, report, tmp_path):
        """Test a written report reads back equal."""
        path = str(tmp_path / "report.json")
        EvalService.write_report(report, path)
        assert EvalService.read_report(path) == report
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        assert data["stop_latency"] == {"mean": None, "n": 0}
        assert data["N"] == 3

    def test_rounding(self, report):
        """Test floats are written at six decimals."""
        data = EvalService.report_to_dict(MetricReport(**{**report.__dict__, "tor": 1 / 3}))
        assert data["tor"] == 0.333333

    def test_fixed_width_floats(self, report, tmp_path):
        """Test the file spells every float with six decimals."""
        report = MetricReport(**{**report.__dict__, "behavior_distribution": {
            "respond": 0.010, "resume": 0.092, "uncertain": 0.000, "unknown": 0.898}})
        path = str(tmp_path / "report.json")
        EvalService.write_report(report, path)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        for digits in ('"respond": 0.010000', '"resume": 0.092000', '"uncertain": 0.000000',
                       '"unknown": 0.898000', '"tor": 0.333333', '"mean": null', '"N": 3'):
            assert digits in text
        assert json.loads(text)["behavior"]["respond"] == 0.01
        assert EvalService.read_report(path) == report

    def test_n_cannot_exceed_total(self, report):
        """Test latency counts are bounded by N."""
        data = EvalService.report_to_dict(report)
        data["response_latency"]["n"] = 4
        with pytest.raises(ValidationError):
            EvalService.report_from_dict(data)

    def test_unknown_field(self, report):
        """Test unexpected keys are rejected."""
        data = dict(EvalService.report_to_dict(report), extra=1)
        with pytest.raises(ValidationError):
            EvalService.report_from_dict(data)

    def test_eval_config(self):
        """Test config JSON fills defaults and checks the rule."""
        cfg = EvalConfigSchema().load({"takeover_rule": "and"})
        assert cfg == EvalConfig(takeover_rule="and")
        with pytest.raises(ValidationError):
            EvalConfigSchema().load({"takeover_rule": "xor"})
