"""
Deterministic mock speech embeddings.

Stands in for the neural speech encoder: every (word, frame offset) pair maps
to a fixed pseudo-random embedding, which the codec then quantizes.
"""
import hashlib
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .rvq import CodecFrame


def _stable_seed(key: str) -> int:
    return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")


class MockSpeechCoder:
    """Caches codec frames for word positions of one codec."""

    def __init__(self, codec) -> None:
        self.codec = codec
        self._cache: Dict[Tuple[str, int], CodecFrame] = {}

    def embedding(self, word: str, offset: int) -> np.ndarray:
        rng = np.random.default_rng(_stable_seed(f"{word}|{offset}"))
        return rng.standard_normal(self.codec.dimension)

    @property
    def silence(self) -> CodecFrame:
        return self.codec.silence_frame

    def frame_for(self, word: str, offset: int) -> CodecFrame:
        return self.frames_for([(word, offset)])[0]

    def frames_for(self, keys: Iterable[Tuple[str, int]]) -> List[CodecFrame]:
        keys = list(keys)
        missing = sorted({k for k in keys if k not in self._cache})
        if missing:
            matrix = np.stack([self.embedding(word, offset) for word, offset in missing])
            for key, codes in zip(missing, self.codec.encode_batch(matrix)):
                self._cache[key] = CodecFrame(tuple(codes))
        return [self._cache[k] for k in keys]
