"""Exact nearest-neighbor retrieval over gallery features.

The scan is an exact L2 sweep at 32-bit precision. Distances are computed
row by row (one reduction per record), so partitioning the gallery across
workers cannot change any value: the parallel scan is bit-identical to the
serial one by construction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyScanError, InputShapeError

_CHUNK_ROWS = 16384


@dataclass(frozen=True)
class ScanResult:
    """Top-K records by ascending distance; ties broken by record index."""

    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.shape[0])


def _chunk_distances(features: np.ndarray, query32: np.ndarray) -> np.ndarray:
    diff = features - query32
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def scan_top_k(
    features: np.ndarray,
    query: np.ndarray,
    k: int,
    excluded=(),
    workers: int = 1,
) -> ScanResult:
    """Exact top-K L2 scan, optionally excluding record indices.

    ``workers > 1`` partitions rows across threads; results are merged in
    fixed partition order and match the serial scan exactly.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if features.ndim != 2:
        raise InputShapeError("features must be (N, F)")
    q = np.asarray(query, dtype=np.float32)
    if q.shape != (features.shape[1],):
        raise InputShapeError(
            f"query has shape {q.shape}, expected ({features.shape[1]},)"
        )
    n = features.shape[0]
    feats32 = features if features.dtype == np.float32 else features.astype(np.float32)

    bounds = [(s, min(s + _CHUNK_ROWS, n)) for s in range(0, n, _CHUNK_ROWS)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda se: _chunk_distances(feats32[se[0] : se[1]], q), bounds)
            )
    else:
        parts = [_chunk_distances(feats32[s:e], q) for s, e in bounds]
    d = np.concatenate(parts) if parts else np.zeros(0, dtype=np.float32)

    if excluded:
        d = d.copy()
        d[np.fromiter(excluded, dtype=np.int64)] = np.inf
    eligible = n - len(set(excluded)) if excluded else n
    if eligible <= 0:
        raise EmptyScanError("every record is excluded from the scan")

    k_eff = min(k, eligible)
    if k_eff < eligible:
        kth = np.partition(d, k_eff - 1)[k_eff - 1]
        cand = np.flatnonzero(d <= kth)
    else:
        cand = np.flatnonzero(np.isfinite(d))
    # cand is in ascending index order; a stable sort on distance keeps
    # equal-distance entries in index order, which is the tie rule.
    order = np.argsort(d[cand], kind="stable")[:k_eff]
    picked = cand[order]
    return ScanResult(indices=picked, distances=d[picked].astype(np.float64))


def all_distances(features: np.ndarray, query: np.ndarray) -> np.ndarray:
    """L2 distance from the query to every record, same kernel as the scan."""
    if features.ndim != 2:
        raise InputShapeError("features must be (N, F)")
    q = np.asarray(query, dtype=np.float32)
    if q.shape != (features.shape[1],):
        raise InputShapeError(
            f"query has shape {q.shape}, expected ({features.shape[1]},)"
        )
    feats32 = features if features.dtype == np.float32 else features.astype(np.float32)
    parts = [
        _chunk_distances(feats32[s : s + _CHUNK_ROWS], q)
        for s in range(0, features.shape[0], _CHUNK_ROWS)
    ]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.float32)


def softmax_probabilities(result: ScanResult) -> np.ndarray:
    """Sampling distribution over the top-K: pi(j) = e^(-d_j) / sum e^(-d)."""
    if len(result) == 0:
        raise EmptyScanError("empty scan result")
    shifted = result.distances.min() - result.distances
    w = np.exp(shifted)
    return w / w.sum()


def sample_candidate(result: ScanResult, rng: np.random.Generator) -> int:
    """Draw a record index from the softmax distribution over the result."""
    pi = softmax_probabilities(result)
    return int(result.indices[rng.choice(len(result), p=pi)])


def greedy_candidate(result: ScanResult) -> int:
    """The modal choice: minimum distance, lowest index on ties."""
    if len(result) == 0:
        raise EmptyScanError("empty scan result")
    return int(result.indices[0])


def initial_candidate(n_records: int, rng: np.random.Generator) -> int:
    """Uniform starting candidate for a fresh dialog."""
    if n_records < 1:
        raise EmptyScanError("empty gallery")
    return int(rng.integers(0, n_records))
