"""
Residual vector quantizer: one code per depth, 16 depths per 80 ms frame by default.

Depth 0 is the semantic codebook, the remaining depths are acoustic. Encoding
is greedy per depth on the running residual; decoding sums dequantized
codewords.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    CODEC_CODEBOOK_SIZE, CODEC_DEPTHS, CODEC_DIMENSION, ERROR_MESSAGES,
)
from ..errors import CodecDimensionError, CodecRangeError, DuplexError
from ..models import FrameClock

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CodecFrame:
    """Per-frame vector of code indices, one per depth."""

    codes: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(int(c) for c in self.codes))

    def __len__(self) -> int:
        return len(self.codes)

    def to_list(self) -> list:
        return list(self.codes)


@dataclass(frozen=True, eq=False)
class Codebook:
    """K codewords of dimension D for one residual depth."""

    depth_index: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise DuplexError(ERROR_MESSAGES["codebook_shape"].format(depth=self.depth_index))
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dimension(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def _norms(self) -> np.ndarray:
        return (self.entries * self.entries).sum(axis=1)

    def nearest(self, residuals: np.ndarray) -> np.ndarray:
        """
        Index of the nearest codeword for every row of ``residuals``.
        Ties resolve to the lowest index (argmin returns the first minimum).
        """
        r_norm = (residuals * residuals).sum(axis=1, keepdims=True)
        dists = r_norm - 2.0 * (residuals @ self.entries.T) + self._norms[None, :]
        return dists.argmin(axis=1)


@dataclass(frozen=True, eq=False)
class RvqCodec:
    """Stack of codebooks sharing one dimension."""

    codebooks: Tuple[Codebook, ...]
    clock: FrameClock = field(default_factory=FrameClock)
    training_mse: Tuple[Tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        codebooks = tuple(self.codebooks)
        if not codebooks:
            raise DuplexError(ERROR_MESSAGES["codec_empty"])
        dimension = codebooks[0].dimension
        for book in codebooks:
            if book.dimension != dimension:
                raise CodecDimensionError(got=book.dimension, expected=dimension)
        object.__setattr__(self, "codebooks", codebooks)

    @classmethod
    def from_arrays(cls, tables: Sequence, clock: Optional[FrameClock] = None) -> "RvqCodec":
        books = tuple(Codebook(depth, table) for depth, table in enumerate(tables))
        return cls(codebooks=books, clock=clock or FrameClock())

    @classmethod
    def random(
        cls,
        depths: int = CODEC_DEPTHS,
        codebook_size: int = CODEC_CODEBOOK_SIZE,
        dimension: int = CODEC_DIMENSION,
        seed: int = 0,
        decay: float = 0.5,
        clock: Optional[FrameClock] = None,
    ) -> "RvqCodec":
        """
        Seeded mock codec. Every depth keeps the zero vector at index 0 and
        codeword scale shrinks by ``decay`` per depth.
        """
        rng = np.random.default_rng(seed)
        tables = []
        for depth in range(depths):
            table = rng.standard_normal((codebook_size, dimension)) * (decay ** depth)
            table[0] = 0.0
            tables.append(table)
        logger.debug(f"Built random codec: {depths} depths, K={codebook_size}, D={dimension}")
        return cls.from_arrays(tables, clock=clock)

    @property
    def depth_count(self) -> int:
        return len(self.codebooks)

    @property
    def dimension(self) -> int:
        return self.codebooks[0].dimension

    @property
    def codebook_sizes(self) -> Tuple[int, ...]:
        return tuple(book.size for book in self.codebooks)

    def _as_matrix(self, embeddings) -> np.ndarray:
        matrix = np.asarray(embeddings, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix[None, :]
        if matrix.ndim != 2 or matrix.shape[1] != self.dimension:
            got = matrix.shape[-1] if matrix.ndim else 0
            raise CodecDimensionError(got=got, expected=self.dimension)
        return matrix

    def encode_batch(self, embeddings) -> np.ndarray:
        """Greedy residual encoding of an (N, D) matrix into (N, depths) codes."""
        residual = self._as_matrix(embeddings).copy()
        codes = np.empty((residual.shape[0], self.depth_count), dtype=np.int64)
        for depth, book in enumerate(self.codebooks):
            idx = book.nearest(residual)
            codes[:, depth] = idx
            residual = residual - book.entries[idx]
        return codes

    def encode_frame(self, embedding) -> CodecFrame:
        codes = self.encode_batch(embedding)
        return CodecFrame(tuple(codes[0]))

    def _check_codes(self, codes: Sequence[int]) -> None:
        if len(codes) != self.depth_count:
            raise DuplexError(ERROR_MESSAGES["codec_frame_length"].format(
                got=len(codes), expected=self.depth_count))
        for depth, (code, book) in enumerate(zip(codes, self.codebooks)):
            if not 0 <= code < book.size:
                raise CodecRangeError(code=code, depth=depth, size=book.size)

    def _check_depth(self, depth: Optional[int]) -> int:
        if depth is None:
            return self.depth_count
        if not 1 <= depth <= self.depth_count:
            raise CodecRangeError(ERROR_MESSAGES["codec_depth"].format(
                depth=depth, depths=self.depth_count))
        return depth

    def decode_frame(self, frame: CodecFrame, depth: Optional[int] = None) -> np.ndarray:
        """Sum of the dequantized codewords of the first ``depth`` depths."""
        depth = self._check_depth(depth)
        self._check_codes(frame.codes)
        out = np.zeros(self.dimension, dtype=np.float64)
        for book, code in zip(self.codebooks[:depth], frame.codes[:depth]):
            out = out + book.entries[code]
        return out

    def decode_batch(self, codes, depth: Optional[int] = None) -> np.ndarray:
        depth = self._check_depth(depth)
        codes = np.asarray(codes, dtype=np.int64)
        out = np.zeros((codes.shape[0], self.dimension), dtype=np.float64)
        for d, book in enumerate(self.codebooks[:depth]):
            column = codes[:, d]
            if column.size and (column.min() < 0 or column.max() >= book.size):
                bad = int(column[(column < 0) | (column >= book.size)][0])
                raise CodecRangeError(code=bad, depth=d, size=book.size)
            out += book.entries[column]
        return out

    def encode_exhaustive(self, embedding) -> CodecFrame:
        """
        Joint search over every code combination. Only meant for tiny codecs
        used as an oracle against greedy encoding.
        """
        target = self._as_matrix(embedding)[0]
        best, best_err = None, np.inf
        for combo in itertools.product(*(range(book.size) for book in self.codebooks)):
            recon = sum(book.entries[c] for book, c in zip(self.codebooks, combo))
            err = float(((target - recon) ** 2).sum())
            if err < best_err:
                best, best_err = combo, err
        return CodecFrame(best)

    def reconstruction_mse(self, embeddings, depth: Optional[int] = None) -> float:
        matrix = self._as_matrix(embeddings)
        recon = self.decode_batch(self.encode_batch(matrix), depth)
        return float(np.mean((matrix - recon) ** 2))

    @cached_property
    def silence_frame(self) -> CodecFrame:
        """Encoding of the zero embedding, used wherever nobody speaks."""
        return self.encode_frame(np.zeros(self.dimension))

    @cached_property
    def speech(self):
        from .speech import MockSpeechCoder

        return MockSpeechCoder(self)
