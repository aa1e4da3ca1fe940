import logging
from dataclasses import dataclass, field
from typing import Optional

from .codec.rvq import RvqCodec
from .config import Config, get_config
from .models import FrameClock


@dataclass
class Toolkit:
    """Resolved configuration plus the shared clock and default codec."""

    config: Config
    clock: FrameClock
    logger: logging.Logger
    _codec: Optional[RvqCodec] = field(default=None, repr=False)

    @property
    def codec(self) -> RvqCodec:
        if self._codec is None:
            self._codec = RvqCodec.random(
                depths=self.config.CODEC_DEPTHS,
                codebook_size=self.config.CODEC_CODEBOOK_SIZE,
                dimension=self.config.CODEC_DIMENSION,
                seed=self.config.CODEC_SEED,
                clock=self.clock,
            )
        return self._codec


def create_toolkit(config_object: Optional[str] = None) -> Toolkit:
    """
    Factory for the toolkit. Accepts a profile name or falls back to
    DUPLEX_ENV.
    """
    config_class = get_config(config_object) if config_object else get_config()

    # Setup logging
    log_level = config_class.LOG_LEVEL
    if not isinstance(log_level, int):
        log_level = getattr(logging, log_level.upper(), logging.INFO)

    log_format = config_class.LOG_FORMAT
    if log_format is None:
        log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    logging.basicConfig(level=log_level, format=log_format)
    logger = logging.getLogger("duplex_kit")
    logger.setLevel(log_level)

    clock = FrameClock(frame_rate=config_class.FRAME_RATE, sample_rate=config_class.SAMPLE_RATE)
    return Toolkit(config=config_class, clock=clock, logger=logger)
