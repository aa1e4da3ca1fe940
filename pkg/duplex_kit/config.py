"""
Configuration profiles for different environments.
"""
import os
from typing import Optional

from .constants import (
    CODEC_CODEBOOK_SIZE, CODEC_DEPTHS, CODEC_DIMENSION, DEFAULT_LOOKAHEAD_FRAMES, FRAME_RATE, JSD_BINS,
    POST_ANCHOR_MARGIN_SECONDS, SAMPLE_RATE, TAKEOVER_MIN_SECONDS, TAKEOVER_MIN_WORDS,
)


class Config:
    """Base configuration class."""

    DEBUG = False
    TESTING = False

    # Logging
    LOG_LEVEL = "INFO"
    LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Token grid
    FRAME_RATE = FRAME_RATE
    SAMPLE_RATE = SAMPLE_RATE

    # Default mock codec for runs without a fitted one
    CODEC_DEPTHS = CODEC_DEPTHS
    CODEC_CODEBOOK_SIZE = CODEC_CODEBOOK_SIZE
    CODEC_DIMENSION = CODEC_DIMENSION
    CODEC_SEED = 0

    # Codec demo command
    DEMO_TRAINING_FRAMES = 4096
    DEMO_DEPTHS = 8
    DEMO_CODEBOOK_SIZE = 64
    DEMO_DIMENSION = 16
    DEMO_ITERATIONS = 25

    DEFAULT_SEED = 0
    OUTPUT_DIR = "out"
    # Frames of silence appended after the last user utterance when running a policy
    TAIL_FRAMES = 50

    LOOKAHEAD_FRAMES = DEFAULT_LOOKAHEAD_FRAMES
    TAKEOVER_MIN_SECONDS = TAKEOVER_MIN_SECONDS
    TAKEOVER_MIN_WORDS = TAKEOVER_MIN_WORDS
    POST_ANCHOR_MARGIN_SECONDS = POST_ANCHOR_MARGIN_SECONDS
    JSD_BINS = JSD_BINS


class DevelopmentConfig(Config):
    """Development configuration."""

    DEBUG = True
    LOG_LEVEL = "DEBUG"


class TestingConfig(Config):
    """Testing configuration."""

    TESTING = True
    DEBUG = True
    LOG_LEVEL = "DEBUG"

    # Small codec so property suites stay fast
    CODEC_CODEBOOK_SIZE = 16
    CODEC_DIMENSION = 8

    DEMO_TRAINING_FRAMES = 512
    DEMO_DEPTHS = 4
    DEMO_CODEBOOK_SIZE = 8
    DEMO_DIMENSION = 4
    DEMO_ITERATIONS = 10

    TAIL_FRAMES = 20


class ProductionConfig(Config):
    """Batch runs: quieter logs."""

    LOG_LEVEL = "WARNING"


# Configuration mapping
config = {
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "production": ProductionConfig,
    "default": DevelopmentConfig,
}


def get_config(config_name: Optional[str] = None) -> Config:
    """
    Get configuration class based on environment.

    Priority order:
    1. Explicit config_name parameter
    2. DUPLEX_ENV environment variable
    3. Default to development
    """
    if config_name is None:
        config_name = os.environ.get("DUPLEX_ENV", "development")

    config_class = config.get(config_name.lower(), config["default"])
    return config_class()
