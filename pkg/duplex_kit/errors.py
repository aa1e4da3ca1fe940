"""
Error types raised by the toolkit.

Every error is a ValueError carrying a message from ERROR_MESSAGES and the
CLI exit code it maps to.
"""
from typing import Any, Optional, Sequence

from .constants import ERROR_MESSAGES, EXIT_DATA


class DuplexError(ValueError):
    """Base class for data errors."""

    exit_code = EXIT_DATA
    message_key = "invalid_config"

    def __init__(self, message: Optional[str] = None, **details: Any):
        self.details = details
        if message is None:
            message = ERROR_MESSAGES[self.message_key].format(**details)
        super().__init__(message)


class TimelineValidationError(DuplexError):
    message_key = "timeline_invalid"

    def __init__(self, session_id: str, violations: Sequence[Any]):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations)
        super().__init__(session_id=session_id, violations=summary)


class CodecDimensionError(DuplexError):
    message_key = "codec_dimension"


class CodecRangeError(DuplexError):
    message_key = "codec_range"


class CodebookFitError(DuplexError):
    message_key = "fit_too_few"


class SpanCapacityError(DuplexError):
    message_key = "span_capacity"


class FrameCollisionError(DuplexError):
    message_key = "frame_collision"


class LookaheadUnderflowError(DuplexError):
    message_key = "lookahead_underflow"


class SequenceGrammarError(DuplexError):
    message_key = "grammar"

    def __init__(self, session_id: str, violations: Sequence[Any]):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations)
        super().__init__(session_id=session_id, violations=summary)


class IllegalTransitionError(DuplexError):
    message_key = "illegal_transition"


class EngineFinalizedError(DuplexError):
    message_key = "engine_finalized"


class DistributionError(DuplexError):
    message_key = "not_distribution"


class EmptySampleError(DuplexError):
    message_key = "empty_samples"


class InputFileError(DuplexError):
    message_key = "input_missing"


class MalformedRecordError(DuplexError):
    message_key = "malformed_line"

    def __init__(self, path: str, line: int, reason: Any):
        self.line = line
        super().__init__(path=path, line=line, reason=reason)


class ReportWriteError(DuplexError):
    message_key = "report_write"
