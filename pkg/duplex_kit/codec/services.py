"""
Service layer for codebook fitting and codec persistence.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..constants import ERROR_MESSAGES
from ..errors import CodebookFitError
from ..models import FrameClock
from .rvq import Codebook, RvqCodec

logger = logging.getLogger(__name__)


_ASSIGN_BLOCK = 1 << 22


def _assign(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = points.shape[0]
    rows = max(1, _ASSIGN_BLOCK // max(1, centroids.size))
    assign = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for start in range(0, n, rows):
        block = points[start:start + rows]
        diffs = block[:, None, :] - centroids[None, :, :]
        dists = (diffs * diffs).sum(axis=2)
        idx = dists.argmin(axis=1)
        assign[start:start + rows] = idx
        best[start:start + rows] = dists[np.arange(block.shape[0]), idx]
    return assign, best


def _lloyd(
    points: np.ndarray, k: int, iterations: int, rng: np.random.Generator
) -> Tuple[np.ndarray, List[float]]:
    """
    Lloyd's algorithm. Records the quantization MSE at every assignment
    step. An empty cluster is reseeded from the point farthest from its
    centroid (lowest index on ties).
    """
    n, dim = points.shape
    seeds = np.sort(rng.choice(n, size=k, replace=False))
    centroids = points[seeds].copy()
    history: List[float] = []

    for _ in range(iterations):
        assign, dists = _assign(points, centroids)
        history.append(float(dists.sum() / (n * dim)))

        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, points)
        updated = centroids.copy()
        filled = counts > 0
        updated[filled] = sums[filled] / counts[filled, None]

        empty = np.flatnonzero(~filled)
        if empty.size:
            spread = ((points - updated[assign]) ** 2).sum(axis=1)
            for cluster in empty:
                farthest = int(np.argmax(spread))
                logger.debug(f"Reseeding empty cluster {cluster} from point {farthest}")
                updated[cluster] = points[farthest]
                spread[farthest] = -1.0

        if np.array_equal(updated, centroids):
            break
        centroids = updated

    return centroids, history


class CodecService:
    """Service class for codec fitting and persistence."""

    @staticmethod
    def fit_codebooks(
        training_frames: Sequence,
        depths: int,
        k: int,
        iterations: int,
        seed: int,
        clock: Optional[FrameClock] = None,
    ) -> RvqCodec:
        """
        Residual k-means: each depth clusters the residuals left by all
        shallower depths. Deterministic given the seed.
        """
        points = np.asarray(training_frames, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if points.shape[0] < k:
            raise CodebookFitError(k=k, n=points.shape[0])
        if iterations < 1:
            raise CodebookFitError(ERROR_MESSAGES["fit_iterations"].format(iterations=iterations))

        rng = np.random.default_rng(seed)
        residual = points.copy()
        books: List[Codebook] = []
        histories: List[Tuple[float, ...]] = []
        for depth in range(depths):
            centroids, history = _lloyd(residual, k, iterations, rng)
            book = Codebook(depth, centroids)
            residual = residual - book.entries[book.nearest(residual)]
            books.append(book)
            histories.append(tuple(history))
            logger.info(f"Fitted depth {depth}: MSE {history[0]:.6f} -> {history[-1]:.6f} in {len(history)} iteration(s)")

        return RvqCodec(codebooks=tuple(books), clock=clock or FrameClock(), training_mse=tuple(histories))

    @staticmethod
    def to_dict(codec: RvqCodec) -> dict:
        from ..schemas import CodecSchema

        return CodecSchema().dump(codec)

    @staticmethod
    def from_dict(data: dict) -> RvqCodec:
        from ..schemas import CodecSchema

        return CodecSchema().load(data)

    @staticmethod
    def save(codec: RvqCodec, path: str) -> None:
        from ..io import write_json_atomic

        write_json_atomic(path, CodecService.to_dict(codec))
        logger.info(f"Saved codec ({codec.depth_count} depths) to {path}")

    @staticmethod
    def load(path: str) -> RvqCodec:
        from ..io import read_json

        return CodecService.from_dict(read_json(path))
