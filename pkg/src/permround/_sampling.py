"""Chunked Monte Carlo plumbing shared by the estimators.

A run of ``N`` samples is cut into fixed-size chunks that depend only on
``(N, n)``. Chunk ``c`` draws from the ``c``-th child of the caller's
stream, and chunk results are merged in chunk order, so the output is the
same for any number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .gaussian import RandomStream

CHUNK_ELEMENTS = 2**21
MAX_RETRIES = 8


class TiedCoordinatesError(ValueError):
    """A vector handed to the rounding has a repeated coordinate."""


class RetriesExhaustedError(RuntimeError):
    """Resampling kept producing tied coordinates; the RNG is suspect."""


def chunk_sizes(total: int, n: int) -> list[int]:
    rows = max(1, CHUNK_ELEMENTS // n)
    sizes = [rows] * (total // rows)
    if total % rows:
        sizes.append(total % rows)
    return sizes


def map_chunks(func, total: int, n: int, s: RandomStream, threads: int = 1) -> list:
    """Run ``func(size, stream)`` over the chunks of a ``total``-sample job."""
    sizes = chunk_sizes(total, n)
    streams = s.spawn(len(sizes))
    if threads <= 1 or len(sizes) == 1:
        return [func(size, st) for size, st in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, sizes, streams))


def has_ties(V: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Row mask: True where the row of ``V`` has a repeated value."""
    srt = np.take_along_axis(V, order, axis=1)
    return np.any(np.diff(srt, axis=1) == 0.0, axis=1)


def draw_untied(M: np.ndarray, rows: int, s: RandomStream):
    """Draw Gaussian rows ``x`` with distinct coordinates in ``x`` and ``M x``.

    Returns ``(X, Y, phi, psi)``: the draws, ``Y = X M^T``, and the row-wise
    ascending sort orders of ``X`` and ``Y``.
    """
    n = M.shape[0]
    X = s.normal((rows, n))
    Y = X @ M.T
    phi = np.argsort(X, axis=1)
    psi = np.argsort(Y, axis=1)
    bad = np.flatnonzero(has_ties(X, phi) | has_ties(Y, psi))
    attempts = 0
    while bad.size:
        if attempts == MAX_RETRIES:
            raise RetriesExhaustedError(f"{bad.size} draws still tied after {MAX_RETRIES} retries")
        attempts += 1
        Xb = s.normal((bad.size, n))
        Yb = Xb @ M.T
        pb = np.argsort(Xb, axis=1)
        qb = np.argsort(Yb, axis=1)
        X[bad], Y[bad], phi[bad], psi[bad] = Xb, Yb, pb, qb
        still = has_ties(Xb, pb) | has_ties(Yb, qb)
        bad = bad[still]
    return X, Y, phi, psi


def match_orders(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Row-wise permutation images with ``sigma[phi[k]] = psi[k]``."""
    sigma = np.empty_like(phi)
    np.put_along_axis(sigma, phi, psi, axis=1)
    return sigma
