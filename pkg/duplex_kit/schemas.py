"""
marshmallow schemas for every file the toolkit reads or writes.

Unknown fields are rejected everywhere. Sequence and session files share
one layout: a header record, one block record per frame and, for sessions,
a trailer record.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple

from marshmallow import (
    RAISE, Schema, ValidationError, fields, post_dump, post_load, pre_dump, validate, validates,
    validates_schema,
)

from .codec.rvq import CodecFrame, RvqCodec
from .constants import (
    BUILDER_MODES, CHANNELS, CODEC_FORMAT_VERSION, ERROR_MESSAGES, REPORT_DECIMALS, ROLES, TAKEOVER_RULES,
    TOKEN_KINDS,
)
from .engine.models import Coercion, DuplexState, SessionLog, run_length_decode, run_length_encode
from .errors import MalformedRecordError
from .evaluation.models import EvalConfig, MetricReport
from .models import (
    ConversationTimeline, FrameClock, SampleInterval, TokenKind, TokenSlot, UtteranceEvent, Violation,
    WordAlignment,
)
from .sequence.models import BuilderConfig, FrameBlock, InterleavedSequence

STATES = [s.value for s in DuplexState]


class StrictSchema(Schema):
    class Meta:
        unknown = RAISE


class Rounded(fields.Float):
    """Float serialized at the report precision."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return round(float(value), REPORT_DECIMALS)


def _clock_errors(data: Dict[str, Any]) -> None:
    try:
        FrameClock(frame_rate=data["frame_rate"], sample_rate=data["sample_rate"])
    except ValueError as exc:
        raise ValidationError(str(exc), "frame_rate") from exc


# Timeline JSONL

class WordSchema(StrictSchema):
    w = fields.Str(required=True)
    start_sample = fields.Int(required=True)
    end_sample = fields.Int(required=True)

    @pre_dump
    def from_alignment(self, word: WordAlignment, **kwargs) -> Dict[str, Any]:
        return {"w": word.word, "start_sample": word.interval.start_sample, "end_sample": word.interval.end_sample}

    @post_load
    def make_alignment(self, data: Dict[str, Any], **kwargs) -> WordAlignment:
        return WordAlignment(data["w"], SampleInterval(data["start_sample"], data["end_sample"]))


class EventSchema(StrictSchema):
    channel = fields.Str(required=True, validate=validate.OneOf(CHANNELS))
    role = fields.Str(required=True, validate=validate.OneOf(ROLES))
    start_sample = fields.Int(required=True)
    end_sample = fields.Int(required=True)
    content_tag = fields.Str(load_default="")
    words = fields.List(fields.Nested(WordSchema), load_default=list)

    @pre_dump
    def from_event(self, event: UtteranceEvent, **kwargs) -> Dict[str, Any]:
        return {
            "channel": event.channel.value,
            "role": event.role.value,
            "start_sample": event.start_sample,
            "end_sample": event.end_sample,
            "content_tag": event.content_tag,
            "words": list(event.words),
        }

    @post_load
    def make_event(self, data: Dict[str, Any], **kwargs) -> UtteranceEvent:
        return UtteranceEvent(
            channel=data["channel"],
            role=data["role"],
            interval=SampleInterval(data["start_sample"], data["end_sample"]),
            words=tuple(data["words"]),
            content_tag=data["content_tag"],
        )


class TimelineSchema(StrictSchema):
    """
    One conversation per JSONL line. Interval and overlap rules are checked
    by the timeline validator, not here.
    """

    session_id = fields.Str(required=True, validate=validate.Length(min=1))
    sample_rate = fields.Int(required=True)
    frame_rate = fields.Float(required=True)
    events = fields.List(fields.Nested(EventSchema), required=True)

    @pre_dump
    def from_timeline(self, timeline: ConversationTimeline, **kwargs) -> Dict[str, Any]:
        return {
            "session_id": timeline.session_id,
            "sample_rate": timeline.clock.sample_rate,
            "frame_rate": timeline.clock.frame_rate,
            "events": list(timeline.events),
        }

    @validates_schema
    def validate_clock(self, data: Dict[str, Any], **kwargs) -> None:
        _clock_errors(data)

    @post_load
    def make_timeline(self, data: Dict[str, Any], **kwargs) -> ConversationTimeline:
        return ConversationTimeline(
            session_id=data["session_id"],
            clock=FrameClock(frame_rate=data["frame_rate"], sample_rate=data["sample_rate"]),
            events=tuple(data["events"]),
        )


# Sequence / session JSONL

class BuilderConfigSchema(StrictSchema):
    lookahead_frames = fields.Int(required=True, validate=validate.Range(min=0))
    pad_weight = fields.Float(required=True)
    sil_weight = fields.Float(required=True)
    bc_weight_multiplier = fields.Float(required=True)
    text_weight = fields.Float(required=True)
    mode = fields.Str(required=True, validate=validate.OneOf(BUILDER_MODES))

    @pre_dump
    def from_config(self, config: BuilderConfig, **kwargs) -> Dict[str, Any]:
        return {
            "lookahead_frames": config.lookahead_frames,
            "pad_weight": config.pad_weight,
            "sil_weight": config.sil_weight,
            "bc_weight_multiplier": config.bc_weight_multiplier,
            "text_weight": config.text_weight,
            "mode": config.mode.value,
        }

    @post_load
    def make_config(self, data: Dict[str, Any], **kwargs) -> BuilderConfig:
        return BuilderConfig(**data)


class HeaderSchema(StrictSchema):
    record = fields.Str(required=True, validate=validate.Equal("header"))
    session_id = fields.Str(required=True)
    sample_rate = fields.Int(required=True)
    frame_rate = fields.Float(required=True)
    lookahead_applied = fields.Int(load_default=0)
    speaking_runs = fields.List(
        fields.Tuple((fields.Int(validate=validate.Range(min=0)), fields.Int(validate=validate.Range(min=1)))),
        load_default=None,
    )
    config = fields.Nested(BuilderConfigSchema, load_default=None)
    policy = fields.Str(load_default="")

    @validates_schema
    def validate_clock(self, data: Dict[str, Any], **kwargs) -> None:
        _clock_errors(data)

    @post_dump
    def drop_empty(self, data: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        return {key: value for key, value in data.items() if value is not None}


class TextSlotSchema(StrictSchema):
    kind = fields.Str(required=True, validate=validate.OneOf(TOKEN_KINDS))
    text = fields.Str(load_default=None)
    loss_w = fields.Float(required=True)

    @pre_dump
    def from_slot(self, slot: TokenSlot, **kwargs) -> Dict[str, Any]:
        return {"kind": slot.kind.value, "text": slot.text, "loss_w": slot.loss_weight}

    @post_dump
    def order_fields(self, data: Dict[str, Any], **kwargs) -> Dict[str, Any]:
        """
        kind first, text only when present, weight last.
        """
        ordered = {"kind": data["kind"]}
        if data.get("text") is not None:
            ordered["text"] = data["text"]
        ordered["loss_w"] = data["loss_w"]
        return ordered

    @post_load
    def make_slot(self, data: Dict[str, Any], **kwargs) -> TokenSlot:
        try:
            return TokenSlot(kind=TokenKind(data["kind"]), text=data["text"], loss_weight=data["loss_w"])
        except ValueError as exc:
            raise ValidationError(str(exc), "text") from exc


class BlockSchema(StrictSchema):
    f = fields.Int(required=True, validate=validate.Range(min=0))
    text_slot = fields.Nested(TextSlotSchema, required=True)
    user_codes = fields.List(fields.Int(validate=validate.Range(min=0)), required=True)
    asst_codes = fields.List(fields.Int(validate=validate.Range(min=0)), required=True)

    @pre_dump
    def from_block(self, block: FrameBlock, **kwargs) -> Dict[str, Any]:
        return {
            "f": block.frame_index,
            "text_slot": block.text_slot,
            "user_codes": block.user_speech.to_list(),
            "asst_codes": block.assistant_speech.to_list(),
        }

    @validates_schema
    def validate_depths(self, data: Dict[str, Any], **kwargs) -> None:
        if len(data["user_codes"]) != len(data["asst_codes"]):
            raise ValidationError("user_codes and asst_codes differ in depth", "asst_codes")

    @post_load
    def make_block(self, data: Dict[str, Any], **kwargs) -> FrameBlock:
        return FrameBlock(
            frame_index=data["f"],
            user_speech=CodecFrame(tuple(data["user_codes"])),
            text_slot=data["text_slot"],
            assistant_speech=CodecFrame(tuple(data["asst_codes"])),
        )


class CoercionSchema(StrictSchema):
    frame = fields.Int(required=True)
    kind = fields.Str(required=True, validate=validate.OneOf(TOKEN_KINDS))
    state = fields.Str(required=True, validate=validate.OneOf(STATES))

    @pre_dump
    def from_coercion(self, coercion: Coercion, **kwargs) -> Dict[str, Any]:
        return {"frame": coercion.frame, "kind": coercion.kind.value, "state": coercion.state.value}

    @post_load
    def make_coercion(self, data: Dict[str, Any], **kwargs) -> Coercion:
        return Coercion(data["frame"], TokenKind(data["kind"]), DuplexState(data["state"]))


class NoteSchema(StrictSchema):
    code = fields.Str(required=True)
    message = fields.Str(required=True)
    indices = fields.List(fields.Int(), load_default=list)

    @post_load
    def make_note(self, data: Dict[str, Any], **kwargs) -> Violation:
        return Violation(data["code"], data["message"], tuple(data["indices"]))


class TrailerSchema(StrictSchema):
    record = fields.Str(required=True, validate=validate.Equal("trailer"))
    state_trace = fields.List(
        fields.Tuple((fields.Str(validate=validate.OneOf(STATES)), fields.Int(validate=validate.Range(min=1)))),
        required=True,
    )
    coercion_count = fields.Int(required=True)
    coercions = fields.List(fields.Nested(CoercionSchema), load_default=list)
    notes = fields.List(fields.Nested(NoteSchema), load_default=list)
    segment_tags = fields.List(fields.Tuple((fields.Int(), fields.Str())), load_default=list)

    @validates_schema
    def validate_count(self, data: Dict[str, Any], **kwargs) -> None:
        if data["coercion_count"] != len(data["coercions"]):
            raise ValidationError("coercion_count does not match the coercion list", "coercion_count")


header_schema = HeaderSchema()
block_schema = BlockSchema()
trailer_schema = TrailerSchema()


def _load(schema: Schema, record: Dict[str, Any], source: str, line: int):
    try:
        return schema.load(record)
    except ValidationError as exc:
        raise MalformedRecordError(source, line, exc.messages) from exc


def _load_blocks(records: Sequence[Dict[str, Any]], source: str, first_line: int) -> Tuple[FrameBlock, ...]:
    blocks = []
    for offset, record in enumerate(records):
        line = first_line + offset
        block = _load(block_schema, record, source, line)
        if block.frame_index != len(blocks):
            raise MalformedRecordError(source, line, f"frame {block.frame_index} out of order")
        blocks.append(block)
    return tuple(blocks)


def _runs_field(runs) -> Optional[List[List[int]]]:
    return [list(run) for run in runs] or None


def _is_trailer(record: Dict[str, Any]) -> bool:
    return record.get("record") == "trailer"


def sequence_to_records(seq: InterleavedSequence, clock: FrameClock = None) -> List[Dict[str, Any]]:
    clock = clock or FrameClock()
    header = header_schema.dump({
        "record": "header",
        "session_id": seq.session_id,
        "sample_rate": clock.sample_rate,
        "frame_rate": clock.frame_rate,
        "lookahead_applied": seq.lookahead_applied,
        "speaking_runs": _runs_field(seq.speaking_runs),
        "config": seq.config,
    })
    return [header] + block_schema.dump(list(seq.blocks), many=True)


def sequence_from_records(
    records: Sequence[Dict[str, Any]], source: str = "<records>"
) -> Tuple[InterleavedSequence, FrameClock]:
    if not records:
        raise MalformedRecordError(source, 1, "missing header")
    header = _load(header_schema, records[0], source, 1)
    body = records[1:]
    if body and _is_trailer(body[-1]):
        body = body[:-1]
    blocks = _load_blocks(body, source, 2)
    clock = FrameClock(frame_rate=header["frame_rate"], sample_rate=header["sample_rate"])
    seq = InterleavedSequence(
        session_id=header["session_id"],
        config=header["config"] or BuilderConfig(),
        blocks=blocks,
        lookahead_applied=header["lookahead_applied"],
        speaking_runs=header["speaking_runs"] or (),
    )
    return seq, clock


def session_to_records(log: SessionLog) -> List[Dict[str, Any]]:
    header = header_schema.dump({
        "record": "header",
        "session_id": log.session_id,
        "sample_rate": log.clock.sample_rate,
        "frame_rate": log.clock.frame_rate,
        "lookahead_applied": log.lookahead_frames,
        "speaking_runs": _runs_field(log.speaking_runs),
        "config": None,
        "policy": log.policy,
    })
    trailer = trailer_schema.dump({
        "record": "trailer",
        "state_trace": [list(run) for run in run_length_encode(log.state_trace)],
        "coercion_count": log.coercion_count,
        "coercions": list(log.coercions),
        "notes": [{"code": n.code, "message": n.message, "indices": list(n.indices)} for n in log.notes],
        "segment_tags": [list(tag) for tag in log.segment_tags],
    })
    return [header] + block_schema.dump(list(log.blocks), many=True) + [trailer]


def session_from_records(
    records: Sequence[Dict[str, Any]], source: str = "<records>"
) -> Tuple[Dict[str, Any], Tuple[FrameBlock, ...], Dict[str, Any]]:
    """Header fields, blocks and trailer fields of one session file."""
    if not records:
        raise MalformedRecordError(source, 1, "missing header")
    if len(records) < 2 or not _is_trailer(records[-1]):
        raise MalformedRecordError(source, len(records) + 1, "missing trailer")
    header = _load(header_schema, records[0], source, 1)
    blocks = _load_blocks(records[1:-1], source, 2)
    trailer_line = len(records)
    trailer = _load(trailer_schema, records[-1], source, trailer_line)

    trace = run_length_decode(trailer["state_trace"])
    if len(trace) != len(blocks):
        raise MalformedRecordError(
            source, trailer_line, f"state trace covers {len(trace)} frames, expected {len(blocks)}")
    return (
        {
            "session_id": header["session_id"],
            "clock": FrameClock(frame_rate=header["frame_rate"], sample_rate=header["sample_rate"]),
            "lookahead_frames": header["lookahead_applied"],
            "speaking_runs": tuple(header["speaking_runs"] or ()),
            "policy": header["policy"],
        },
        blocks,
        {
            "state_trace": trace,
            "segment_tags": tuple((int(f), str(t)) for f, t in trailer["segment_tags"]),
            "coercions": tuple(trailer["coercions"]),
            "notes": tuple(trailer["notes"]),
        },
    )


# Codec JSON

class CodecSchema(StrictSchema):
    """Row-major codebook tables, one per depth, plus the Lloyd MSE history."""

    version = fields.Int(required=True)
    dimension = fields.Int(required=True, validate=validate.Range(min=1))
    depths = fields.Int(required=True, validate=validate.Range(min=1))
    sample_rate = fields.Int(required=True)
    frame_rate = fields.Float(required=True)
    codebooks = fields.List(fields.List(fields.List(fields.Float())), required=True)
    training_mse = fields.List(fields.List(fields.Float()), load_default=list)

    @pre_dump
    def from_codec(self, codec: RvqCodec, **kwargs) -> Dict[str, Any]:
        return {
            "version": CODEC_FORMAT_VERSION,
            "dimension": codec.dimension,
            "depths": codec.depth_count,
            "sample_rate": codec.clock.sample_rate,
            "frame_rate": codec.clock.frame_rate,
            "codebooks": [book.entries.tolist() for book in codec.codebooks],
            "training_mse": [list(h) for h in codec.training_mse],
        }

    @validates("version")
    def validate_version(self, value: int, **kwargs) -> None:
        if value != CODEC_FORMAT_VERSION:
            raise ValidationError(ERROR_MESSAGES["codec_version"].format(version=value))

    @validates_schema
    def validate_tables(self, data: Dict[str, Any], **kwargs) -> None:
        _clock_errors(data)
        if len(data["codebooks"]) != data["depths"]:
            raise ValidationError(f"expected {data['depths']} codebooks", "codebooks")
        for depth, table in enumerate(data["codebooks"]):
            if not table or any(len(row) != data["dimension"] for row in table):
                raise ValidationError(ERROR_MESSAGES["codebook_shape"].format(depth=depth), "codebooks")

    @post_load
    def make_codec(self, data: Dict[str, Any], **kwargs) -> RvqCodec:
        codec = RvqCodec.from_arrays(
            data["codebooks"], clock=FrameClock(frame_rate=data["frame_rate"], sample_rate=data["sample_rate"]))
        return RvqCodec(
            codebooks=codec.codebooks,
            clock=codec.clock,
            training_mse=tuple(tuple(h) for h in data["training_mse"]),
        )


# Evaluation config and report JSON

class EvalConfigSchema(StrictSchema):
    takeover_min_seconds = fields.Float(load_default=EvalConfig.takeover_min_seconds)
    takeover_min_words = fields.Int(load_default=EvalConfig.takeover_min_words)
    post_anchor_margin_seconds = fields.Float(load_default=EvalConfig.post_anchor_margin_seconds)
    jsd_bins = fields.Int(load_default=EvalConfig.jsd_bins)
    jsd_smoothing = fields.Float(load_default=EvalConfig.jsd_smoothing)
    takeover_rule = fields.Str(load_default="or", validate=validate.OneOf(TAKEOVER_RULES))

    @post_load
    def make_config(self, data: Dict[str, Any], **kwargs) -> EvalConfig:
        return EvalConfig(**data)


class BehaviorSchema(StrictSchema):
    respond = Rounded(required=True, validate=validate.Range(min=0, max=1))
    resume = Rounded(required=True, validate=validate.Range(min=0, max=1))
    uncertain = Rounded(required=True, validate=validate.Range(min=0, max=1))
    unknown = Rounded(required=True, validate=validate.Range(min=0, max=1))


class LatencySchema(StrictSchema):
    mean = Rounded(required=True, allow_none=True, validate=validate.Range(min=0))
    n = fields.Int(required=True, validate=validate.Range(min=0))


class ReportSchema(StrictSchema):
    scenario = fields.Str(required=True)
    N = fields.Int(required=True, validate=validate.Range(min=0))
    tor = Rounded(required=True, validate=validate.Range(min=0, max=1))
    bc_freq = Rounded(required=True, validate=validate.Range(min=0))
    jsd = Rounded(required=True, validate=validate.Range(min=0, max=1))
    behavior = fields.Nested(BehaviorSchema, required=True)
    stop_latency = fields.Nested(LatencySchema, required=True)
    response_latency = fields.Nested(LatencySchema, required=True)
    coercions = fields.Int(required=True, validate=validate.Range(min=0))

    @pre_dump
    def from_report(self, report: MetricReport, **kwargs) -> Dict[str, Any]:
        return {
            "scenario": report.scenario,
            "N": report.total_n,
            "tor": report.tor,
            "bc_freq": report.backchannel_freq,
            "jsd": report.jsd,
            "behavior": dict(report.behavior_distribution),
            "stop_latency": {"mean": report.stop_latency_mean, "n": report.stop_n},
            "response_latency": {"mean": report.response_latency_mean, "n": report.response_n},
            "coercions": report.coercion_count,
        }

    @validates_schema
    def validate_coverage(self, data: Dict[str, Any], **kwargs) -> None:
        total = data["N"]
        for key in ("stop_latency", "response_latency"):
            if data[key]["n"] > total:
                raise ValidationError(f"n exceeds N ({total})", key)
        if total > 0 and abs(sum(data["behavior"].values()) - 1.0) > 2e-3:
            raise ValidationError("proportions must sum to 1", "behavior")

    @post_load
    def make_report(self, data: Dict[str, Any], **kwargs) -> MetricReport:
        return MetricReport(
            scenario=data["scenario"],
            total_n=data["N"],
            tor=data["tor"],
            backchannel_freq=data["bc_freq"],
            jsd=data["jsd"],
            behavior_distribution=dict(data["behavior"]),
            stop_latency_mean=data["stop_latency"]["mean"],
            stop_n=data["stop_latency"]["n"],
            response_latency_mean=data["response_latency"]["mean"],
            response_n=data["response_latency"]["n"],
            coercion_count=data["coercions"],
        )


# Dataset manifest

class ManifestSessionSchema(StrictSchema):
    session_id = fields.Str(required=True)
    template = fields.Str(required=True)
    seed = fields.Int(required=True)
    snr_db = fields.Float(required=True)
    kept = fields.Bool(required=True)
    reasons = fields.List(fields.Str(), load_default=list)
    diagnostics = fields.List(fields.Str(), load_default=list)


class ManifestSchema(StrictSchema):
    seed = fields.Int(required=True)
    requested = fields.Int(required=True, validate=validate.Range(min=0))
    kept = fields.Int(required=True, validate=validate.Range(min=0))
    families = fields.List(fields.Str(), required=True)
    templates = fields.List(fields.Str(), required=True)
    specificity = fields.List(fields.Str(), required=True)
    flow = fields.List(fields.Str(), required=True)
    interactions = fields.List(fields.Str(), required=True)
    tts = fields.Dict(keys=fields.Str(), values=fields.Float(), required=True)
    layout = fields.Dict(keys=fields.Str(), values=fields.Float(), required=True)
    snr_db_range = fields.List(fields.Float(), required=True, validate=validate.Length(equal=2))
    filtered = fields.Dict(keys=fields.Str(), values=fields.Int(), required=True)
    sessions = fields.List(fields.Nested(ManifestSessionSchema), required=True)

    @validates_schema
    def validate_counts(self, data: Dict[str, Any], **kwargs) -> None:
        if data["kept"] > data["requested"]:
            raise ValidationError("kept exceeds requested", "kept")
