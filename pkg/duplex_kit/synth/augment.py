"""Noise mixing at a target signal-to-noise ratio."""
from typing import Tuple

import numpy as np

from ..constants import ERROR_MESSAGES
from ..errors import DuplexError
from .models import AugmentConfig


def mix_at_snr(signal_rms: float, noise_rms: float, target_snr_db: float) -> float:
    """Gain g on the noise such that 20*log10(signal_rms / (g * noise_rms)) == target_snr_db."""
    if signal_rms <= 0 or noise_rms <= 0:
        raise DuplexError(ERROR_MESSAGES["nonpositive_rms"].format(signal=signal_rms, noise=noise_rms))
    return float((signal_rms / noise_rms) * 10.0 ** (-target_snr_db / 20.0))


def rms(samples) -> float:
    samples = np.asarray(samples, dtype=np.float64)
    return float(np.sqrt(np.mean(samples ** 2)))


def achieved_snr_db(signal, noise) -> float:
    return float(20.0 * np.log10(rms(signal) / rms(noise)))


def mix_noise(signal, noise, target_snr_db: float) -> Tuple[np.ndarray, float]:
    """Scale ``noise`` to the target SNR against ``signal`` and add it. Returns (mixture, gain)."""
    signal = np.asarray(signal, dtype=np.float64)
    noise = np.resize(np.asarray(noise, dtype=np.float64), signal.shape)
    gain = mix_at_snr(rms(signal), rms(noise), target_snr_db)
    return signal + gain * noise, gain


def sample_snr_db(rng: np.random.Generator, config: AugmentConfig = AugmentConfig()) -> float:
    return float(rng.uniform(config.snr_db_min, config.snr_db_max))
