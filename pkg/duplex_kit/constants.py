"""
Constants for the duplex toolkit.
Centralized definitions for messages, values, and limits to ensure consistency.
"""

# Frame grid
FRAME_RATE = 12.5
SAMPLE_RATE = 24000

# Codec layout
CODEC_DEPTHS = 16
CODEC_CODEBOOK_SIZE = 2048
CODEC_DIMENSION = 512
CODEC_FORMAT_VERSION = 1

# Text-slot vocabulary
TOKEN_KINDS = ["SIL", "BOW", "BC", "PAD", "TEXT"]
OPENER_KINDS = ["BOW", "BC"]

# Timeline vocabulary
CHANNELS = ["user", "assistant"]
ROLES = ["speech", "backchannel", "interrupt", "simultaneous"]

# Builder defaults
DEFAULT_LOOKAHEAD_FRAMES = 1
DEFAULT_PAD_WEIGHT = 0.75
DEFAULT_TEXT_WEIGHT = 1.0
DEFAULT_BC_WEIGHT_MULTIPLIER = 50.0
SIL_WEIGHTS = {
    "pretraining": 0.5,
    "finetuning": 0.25,
}
BUILDER_MODES = list(SIL_WEIGHTS)

# Mock TTS defaults (milliseconds)
TTS_BASE_MS = 60.0
TTS_PER_CHAR_MS = 30.0
TTS_GAP_MS = 40.0
TTS_JITTER = 0.1
TTS_MIN_ONSET_SPACING_MS = 160.0

# Synthetic pipeline
TASK_SCENARIO_COUNT = 15
GAME_SCENARIO_COUNT = 7
FAMILIES = ["task_oriented", "open_domain", "speech_game"]
FAMILY_ALIASES = {
    "task": "task_oriented",
    "open": "open_domain",
    "game": "speech_game",
}
SPECIFICITIES = ["minimal", "topic_guided", "detailed"]
FLOWS = ["direct", "inquiry"]
INTERACTIONS = ["backchannel", "interrupt", "simultaneous"]
CLARIFICATION_MARKER = "clarification"
BACKCHANNEL_JITTER_MS = 400.0
AUDIO_TRANSCRIPT_RATIO = 3.0
SNR_DB_MIN = -30.0
SNR_DB_MAX = 6.0

# Evaluation
TAKEOVER_MIN_SECONDS = 1.5
TAKEOVER_MIN_WORDS = 5
POST_ANCHOR_MARGIN_SECONDS = 0.5
JSD_BINS = 10
JSD_SMOOTHING = 1e-9
TAKEOVER_RULES = ["or", "and"]
BEHAVIOR_LABELS = ["Respond", "Resume", "Uncertain", "Unknown"]
SCENARIOS = [
    "pause_handling",
    "backchannel",
    "smooth_turn_taking",
    "user_interruption",
    "user_backchannel",
    "background_speech",
    "talking_to_others",
]
REPORT_DECIMALS = 6

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# Filter reasons
FILTER_REASONS = {
    "ratio": "audio-transcript-ratio",
    "backchannel": "non-overlapping-backchannel",
    "duplicate": "duplicate",
}

# Violation codes
VIOLATIONS = {
    "reversed": "reversed-interval",
    "word_outside": "word-outside-utterance",
    "word_order": "word-order",
    "speech_overlap": "same-channel-overlap",
    "opener_missing": "text-without-opener",
    "text_after_pad": "text-after-pad",
    "self_backchannel": "self-backchannel",
    "frame_index": "frame-index",
    "state_trace": "state-trace",
}

# Error messages
ERROR_MESSAGES = {
    "invalid_clock": "Invalid clock: {sample_rate} samples/s is not a whole number of samples per frame at {frame_rate} Hz.",
    "invalid_interval": "Invalid interval [{start}, {end}).",
    "invalid_slot": "Invalid text slot: {reason}.",
    "timeline_invalid": "Timeline '{session_id}' is invalid: {violations}.",
    "codec_dimension": "Embedding dimension {got} does not match codec dimension {expected}.",
    "codec_range": "Code {code} at depth {depth} is outside [0, {size}).",
    "codec_depth": "Depth {depth} is outside [1, {depths}].",
    "codec_frame_length": "Frame carries {got} codes, codec has {expected} depths.",
    "codec_empty": "Codec needs at least one codebook.",
    "codebook_shape": "Codebook {depth} is not a non-empty K x D matrix.",
    "fit_too_few": "Need at least {k} training frames, got {n}.",
    "fit_iterations": "Iterations must be at least 1, got {iterations}.",
    "codec_version": "Unsupported codec format version {version}.",
    "span_capacity": "Word '{word}' spans {frames} frame(s) but needs {needed}.",
    "frame_collision": "Assistant events collide at frame {frame}.",
    "lookahead_underflow": "Text slot at frame {frame} would shift below frame 0.",
    "lookahead_overflow": "Text slot at frame {frame} would shift past the last frame.",
    "lookahead_mismatch": "Lookahead shift {k} is neither {forward} nor -{applied}.",
    "lookahead_trailing": "Span ending at frame {frame} has no lookahead padding to remove.",
    "grammar": "Sequence '{session_id}' breaks the text-slot grammar: {violations}.",
    "illegal_transition": "Slot {kind} is illegal while {state}.",
    "engine_finalized": "Engine for session '{session_id}' is finalized.",
    "empty_stream": "User stream is empty.",
    "empty_samples": "No samples to evaluate.",
    "length_mismatch": "Distributions have different lengths ({p} vs {q}).",
    "not_distribution": "Vector sums to {total}, not 1.",
    "nonpositive_rms": "RMS values must be positive (signal {signal}, noise {noise}).",
    "snr_range": "snr_db_min {low} exceeds snr_db_max {high}.",
    "empty_script": "Dialogue script is empty.",
    "empty_grammar": "Template grammar has no productions for '{symbol}'.",
    "unknown_template": "Unknown template '{template}' (use family:id).",
    "input_missing": "Input file not found: {path}",
    "malformed_line": "Malformed record at {path}:{line}: {reason}",
    "missing_timeline": "No timeline for session '{session_id}'.",
    "report_write": "Cannot write report to {path}: {reason}",
    "invalid_policy": "Unknown policy '{policy}' (use silent, scripted, random or vad:THRESH).",
    "invalid_config": "Invalid configuration: {reason}",
}

# Success messages
SUCCESS_MESSAGES = {
    "synth": "Wrote {kept} of {requested} timelines to {path}.",
    "build": "Wrote {count} sequences to {path}.",
    "run": "Wrote {count} sessions to {path}.",
    "eval": "Wrote report for {count} samples to {path}.",
    "codec": "Wrote codec and round-trip report to {path}.",
}
