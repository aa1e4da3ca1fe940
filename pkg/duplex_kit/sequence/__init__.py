from .models import (
    BuilderConfig, BuilderMode, FrameBlock, InterleavedSequence, InvertedSequence, SpeakingSpan, WordOnset,
)
from .services import SequenceService
from .tokenizers import CharTokenizer, TOKENIZERS, WordTokenizer

__all__ = [
    "BuilderConfig",
    "BuilderMode",
    "CharTokenizer",
    "FrameBlock",
    "InterleavedSequence",
    "InvertedSequence",
    "SequenceService",
    "SpeakingSpan",
    "TOKENIZERS",
    "WordOnset",
    "WordTokenizer",
]
