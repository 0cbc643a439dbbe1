"""K-means codebook fitting: seeded k-means++ initialization and Lloyd iterations.

Distances are computed in float64 with the expanded form
``|x|^2 - 2 x.c + |c|^2`` over fixed-size chunks of frames. Chunks may be assigned
on worker threads; their partial sums are merged in chunk order, so fitted
centroids do not depend on the worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core.errors import NumericError
from src.core.logger import get_logger

logger = get_logger(__name__)

# Slack for float64 round-off when checking that distortion never increases.
MONOTONE_SLACK = 1e-9


@dataclass
class KMeansResult:
    """Fitted centroids with the distortion trace of the run."""

    centroids: np.ndarray
    distortion: float
    iterations: int
    history: list[float] = field(default_factory=list)
    repaired: int = 0


def nearest_centroids(
    frames: np.ndarray,
    centroids: np.ndarray,
    chunk_size: int = 4096,
) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest centroid per frame.

    Ties go to the lowest index (``argmin`` returns the first minimum).
    """
    frames = np.asarray(frames, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    ids = np.empty(frames.shape[0], dtype=np.int64)
    dists = np.empty(frames.shape[0], dtype=np.float64)
    c_norm = np.einsum("kd,kd->k", centroids, centroids)
    for start in range(0, frames.shape[0], chunk_size):
        block = frames[start : start + chunk_size]
        ids[start : start + len(block)], dists[start : start + len(block)] = _assign_block(
            block, centroids, c_norm
        )
    return ids, dists


def _assign_block(
    block: np.ndarray, centroids: np.ndarray, c_norm: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    x_norm = np.einsum("nd,nd->n", block, block)
    d2 = x_norm[:, None] - 2.0 * block @ centroids.T + c_norm[None, :]
    ids = np.argmin(d2, axis=1)
    # Near-ties in the expanded form are settled on exact distances, lowest index first.
    best = d2[np.arange(len(block)), ids]
    slack = 1e-9 * (x_norm + c_norm.max()) + 1e-12
    near = d2 <= (best + slack)[:, None]
    for row in np.flatnonzero(near.sum(axis=1) > 1):
        candidates = np.flatnonzero(near[row])
        diff = block[row] - centroids[candidates]
        ids[row] = candidates[np.argmin(np.einsum("kd,kd->k", diff, diff))]
    # Exact distances for the chosen centroids; the expanded form can go slightly negative.
    diff = block - centroids[ids]
    return ids, np.einsum("nd,nd->n", diff, diff)


def kmeans_plus_plus(frames: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, the rest sampled proportional to D^2."""
    n = frames.shape[0]
    centers = np.empty((k, frames.shape[1]), dtype=np.float64)
    centers[0] = frames[rng.integers(n)]
    closest = np.einsum("nd,nd->n", frames - centers[0], frames - centers[0])
    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(n, p=closest / total))
        else:
            index = int(rng.integers(n))
        centers[i] = frames[index]
        diff = frames - centers[i]
        np.minimum(closest, np.einsum("nd,nd->n", diff, diff), out=closest)
    return centers


class KMeans:
    """Lloyd's algorithm over float64 frames.

    Args:
        k: Number of centroids
        seed: Seed of the k-means++ initialization
        max_iters: Iteration cap
        tol: Stop when the relative distortion improvement falls below this
        chunk_size: Frames per assignment chunk
        max_workers: Threads assigning chunks concurrently
    """

    def __init__(
        self,
        k: int,
        seed: int = 0,
        max_iters: int = 100,
        tol: float = 1e-6,
        chunk_size: int = 4096,
        max_workers: int = 1,
    ):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.seed = seed
        self.max_iters = max_iters
        self.tol = tol
        self.chunk_size = chunk_size
        self.max_workers = max_workers

    def fit(self, frames: np.ndarray) -> KMeansResult:
        """Fit ``k`` centroids to ``n x D`` frames.

        Raises:
            ValueError: If there are no frames
            NumericError: If frames are non-finite or distortion increases
        """
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError("kmeans_fit needs at least one D-dimensional frame")
        if not np.all(np.isfinite(frames)):
            raise NumericError("kmeans_fit received non-finite frames")

        distinct = np.unique(frames, axis=0).shape[0]
        if self.k > distinct:
            logger.warning(
                f"k={self.k} exceeds the {distinct} distinct frames; "
                "duplicate centroids will be replaced by farthest points"
            )

        rng = np.random.default_rng(self.seed)
        centroids = kmeans_plus_plus(frames, self.k, rng)
        history: list[float] = []
        repaired = 0
        iterations = 0

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            ids, dists = self._assign(frames, centroids, pool)
            distortion = float(dists.mean())
            history.append(distortion)
            for iterations in range(1, self.max_iters + 1):
                centroids, fixed = self._update(frames, centroids, ids, dists, pool)
                repaired += fixed
                ids, dists = self._assign(frames, centroids, pool)
                new_distortion = float(dists.mean())
                if new_distortion > distortion * (1.0 + MONOTONE_SLACK) + MONOTONE_SLACK:
                    raise NumericError(
                        f"Lloyd distortion increased at iteration {iterations}: "
                        f"{distortion:.6g} -> {new_distortion:.6g}"
                    )
                history.append(new_distortion)
                improvement = distortion - new_distortion
                distortion = new_distortion
                if distortion == 0.0 or improvement <= self.tol * max(distortion, 1e-300):
                    break

        logger.debug(
            f"k-means k={self.k}: distortion {distortion:.6g} after {iterations} iterations"
        )
        return KMeansResult(centroids, distortion, iterations, history, repaired)

    def _chunks(self, n: int) -> list[slice]:
        return [slice(s, min(s + self.chunk_size, n)) for s in range(0, n, self.chunk_size)]

    def _assign(
        self, frames: np.ndarray, centroids: np.ndarray, pool: ThreadPoolExecutor
    ) -> tuple[np.ndarray, np.ndarray]:
        c_norm = np.einsum("kd,kd->k", centroids, centroids)
        chunks = self._chunks(frames.shape[0])
        results = list(pool.map(lambda s: _assign_block(frames[s], centroids, c_norm), chunks))
        ids = np.concatenate([r[0] for r in results])
        dists = np.concatenate([r[1] for r in results])
        return ids, dists

    def _update(
        self,
        frames: np.ndarray,
        centroids: np.ndarray,
        ids: np.ndarray,
        dists: np.ndarray,
        pool: ThreadPoolExecutor,
    ) -> tuple[np.ndarray, int]:
        dims = frames.shape[1]

        def partial(s: slice) -> tuple[np.ndarray, np.ndarray]:
            sums = np.zeros((self.k, dims), dtype=np.float64)
            np.add.at(sums, ids[s], frames[s])
            counts = np.bincount(ids[s], minlength=self.k)
            return sums, counts

        sums = np.zeros((self.k, dims), dtype=np.float64)
        counts = np.zeros(self.k, dtype=np.int64)
        for chunk_sums, chunk_counts in pool.map(partial, self._chunks(frames.shape[0])):
            sums += chunk_sums
            counts += chunk_counts

        updated = centroids.copy()
        filled = counts > 0
        updated[filled] = sums[filled] / counts[filled, None]

        empty = np.flatnonzero(~filled)
        if empty.size:
            # Reseed empty clusters with the frames farthest from their centroids.
            order = np.argsort(-dists, kind="stable")
            taken = set()
            cursor = 0
            for cluster in empty:
                while cursor < order.size and dists[order[cursor]] > 0 and order[cursor] in taken:
                    cursor += 1
                if cursor < order.size and dists[order[cursor]] > 0:
                    updated[cluster] = frames[order[cursor]]
                    taken.add(order[cursor])
                    cursor += 1
            logger.debug(f"Reseeded {empty.size} empty clusters")
        return updated, int(empty.size)


def kmeans_fit(
    frames: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
    chunk_size: int = 4096,
    max_workers: int = 1,
) -> KMeansResult:
    """Fit a codebook to ``n x D`` frames; see ``KMeans``."""
    return KMeans(k, seed, max_iters, tol, chunk_size, max_workers).fit(frames)
