from .augment import achieved_snr_db, mix_at_snr, mix_noise, rms, sample_snr_db
from .filters import TimelineFilter, canonical_hash
from .models import (
    AugmentConfig, CorpusResult, DialogueScript, Family, FilterResult, Flow, Interaction, MockTts,
    ScenarioTemplate, Specificity, TimelineLayout, Turn,
)
from .services import SynthService, snap_cut
from .templates import all_templates, get_template

__all__ = [
    "AugmentConfig",
    "CorpusResult",
    "DialogueScript",
    "Family",
    "FilterResult",
    "Flow",
    "Interaction",
    "MockTts",
    "ScenarioTemplate",
    "Specificity",
    "SynthService",
    "TimelineFilter",
    "TimelineLayout",
    "Turn",
    "achieved_snr_db",
    "all_templates",
    "canonical_hash",
    "get_template",
    "mix_at_snr",
    "mix_noise",
    "rms",
    "sample_snr_db",
    "snap_cut",
]
