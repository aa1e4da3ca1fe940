"""
File handoff between pipeline stages: JSONL and JSON, written atomically.
"""
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional

from marshmallow import ValidationError

from .errors import InputFileError, MalformedRecordError
from .models import ConversationTimeline
from .schemas import TimelineSchema

logger = logging.getLogger(__name__)

timelines_schema = TimelineSchema(many=True)
timeline_schema = TimelineSchema()


def dumps(record: Any) -> str:
    """Compact, key-order-preserving JSON."""
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(path: str) -> None:
    if not os.path.isfile(path):
        raise InputFileError(path=path)


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    """One JSON object per line. Errors name the 1-based line number."""
    _require(path)
    records = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise MalformedRecordError(path, number, "empty line")
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(path, number, exc.msg) from exc
            if not isinstance(record, dict):
                raise MalformedRecordError(path, number, "expected a JSON object")
            records.append(record)
    return records


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> None:
    _atomic_write(path, "".join(dumps(r) + "\n" for r in records))


def read_json(path: str) -> Any:
    _require(path)
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(path, exc.lineno, exc.msg) from exc


def dumps_fixed(value: Any, decimals: int, level: int = 0) -> str:
    """Indented JSON with every finite float written at ``decimals`` places."""
    pad, inner = "  " * level, "  " * (level + 1)
    if isinstance(value, float) and math.isfinite(value):
        return f"{value:.{decimals}f}"
    if isinstance(value, dict) and value:
        items = [
            f"{inner}{json.dumps(str(key), ensure_ascii=False)}: {dumps_fixed(item, decimals, level + 1)}"
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)) and value:
        items = [inner + dumps_fixed(item, decimals, level + 1) for item in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return json.dumps(value, ensure_ascii=False)


def write_json_atomic(path: str, data: Any, decimals: Optional[int] = None) -> None:
    text = json.dumps(data, indent=2, ensure_ascii=False) if decimals is None else dumps_fixed(data, decimals)
    _atomic_write(path, text + "\n")


def read_timelines(path: str) -> List[ConversationTimeline]:
    timelines = []
    for number, record in enumerate(read_jsonl(path), start=1):
        try:
            timelines.append(timeline_schema.load(record))
        except ValidationError as exc:
            raise MalformedRecordError(path, number, exc.messages) from exc
    logger.debug(f"Read {len(timelines)} timeline(s) from {path}")
    return timelines


def write_timelines(path: str, timelines: Iterable[ConversationTimeline]) -> None:
    write_jsonl(path, timelines_schema.dump(list(timelines)))


def read_session(path: str):
    from .engine.services import EngineService

    return EngineService.from_records(read_jsonl(path), source=path)


def write_session(path: str, log) -> None:
    from .engine.services import EngineService

    write_jsonl(path, EngineService.to_records(log))


def read_sequence(path: str):
    from .sequence.services import SequenceService

    return SequenceService.from_records(read_jsonl(path), source=path)


def write_sequence(path: str, seq, clock=None) -> None:
    from .sequence.services import SequenceService

    write_jsonl(path, SequenceService.to_records(seq, clock))
