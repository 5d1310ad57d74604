"""Randomized rounding of an orthogonal matrix to a permutation.

The rounding of ``U`` at ``x`` matches the k-th smallest coordinate of ``x``
with the k-th smallest coordinate of ``y = U x``: with ``phi`` and ``psi``
the ascending sort orders of ``x`` and ``y``, the result ``sigma`` satisfies
``sigma(phi[k]) = psi[k]``. For Gaussian ``x`` the vector ``U x`` is close to
``sigma x``; :func:`estimate_residual_moments` measures how close.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._sampling import (
    MAX_RETRIES,
    RetriesExhaustedError,
    TiedCoordinatesError,
    draw_untied,
    has_ties,
    map_chunks,
    match_orders,
)
from .core import DimensionError, Permutation, apply_perm, as_orthogonal
from .gaussian import RandomStream, sample_gaussian_vector

__all__ = [
    "EmpiricalDistribution",
    "ResidualMoments",
    "RetriesExhaustedError",
    "RoundingSample",
    "TiedCoordinatesError",
    "estimate_distribution",
    "estimate_residual_moments",
    "residual",
    "round_at",
    "round_batch",
    "sample_rounding",
]


@dataclass(frozen=True)
class RoundingSample:
    x: np.ndarray
    sigma: Permutation
    z: np.ndarray


@dataclass
class EmpiricalDistribution:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def add(self, sigma: Permutation, count: int = 1) -> None:
        self.counts[sigma] += count
        self.total += count

    def merge(self, other: EmpiricalDistribution) -> None:
        self.counts.update(other.counts)
        self.total += other.total

    def frequency(self, sigma: Permutation) -> float:
        return self.counts.get(sigma, 0) / self.total

    def support(self) -> list[Permutation]:
        return list(self.counts)

    def most_common(self, k: int | None = None):
        return self.counts.most_common(k)

    def to_dict(self) -> dict[str, int]:
        return {p.one_line(): c for p, c in self.counts.most_common()}


@dataclass(frozen=True)
class ResidualMoments:
    """Monte Carlo estimates of ``E zeta_i^2`` with ``zeta = U x - sigma(U, x) x``."""

    per_coordinate_second_moment: np.ndarray
    total_second_moment: float
    sample_count: int
    standard_errors: np.ndarray
    total_standard_error: float

    @property
    def max_moment(self) -> float:
        return float(self.per_coordinate_second_moment.max())


def _check_distinct(v: np.ndarray, what: str) -> np.ndarray:
    order = np.argsort(v)
    if has_ties(v[None, :], order[None, :])[0]:
        raise TiedCoordinatesError(f"{what} has repeated coordinates")
    return order


def round_at(U, x) -> Permutation:
    """Round ``U`` at ``x``; raises :class:`TiedCoordinatesError` on ties in ``x`` or ``U x``."""
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != (U.shape[0],):
        raise DimensionError(f"x has shape {x.shape}, U is {U.shape}")
    phi = _check_distinct(x, "x")
    psi = _check_distinct(U @ x, "U x")
    sigma = np.empty_like(phi)
    sigma[phi] = psi
    return Permutation._trusted(sigma)


def round_batch(U, X) -> np.ndarray:
    """Round ``U`` at every row of ``X``; returns an ``(N, n)`` array of images."""
    U = np.asarray(U, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X @ U.T
    phi = np.argsort(X, axis=1)
    psi = np.argsort(Y, axis=1)
    tied = has_ties(X, phi) | has_ties(Y, psi)
    if np.any(tied):
        raise TiedCoordinatesError(f"rows {np.flatnonzero(tied)[:5].tolist()} have repeated coordinates")
    return match_orders(phi, psi)


def residual(U, x, sigma: Permutation) -> np.ndarray:
    """``U x - sigma x``."""
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    return U @ x - apply_perm(sigma, x)


def sample_rounding(U, s: RandomStream) -> RoundingSample:
    U = as_orthogonal(U)
    n = U.shape[0]
    for _ in range(MAX_RETRIES + 1):
        x = sample_gaussian_vector(n, s)
        try:
            sigma = round_at(U, x)
        except TiedCoordinatesError:
            continue
        return RoundingSample(x=x, sigma=sigma, z=residual(U, x, sigma))
    raise RetriesExhaustedError(f"tied coordinates on {MAX_RETRIES + 1} consecutive draws")


def _residual_rows(X, Y, phi, psi):
    # (sigma x) at position psi[k] is the k-th smallest coordinate of x
    Z = Y.copy()
    rows = np.arange(X.shape[0])[:, None]
    Z[rows, psi] -= np.take_along_axis(X, phi, axis=1)
    return Z


def estimate_residual_moments(U, N: int, s: RandomStream, threads: int = 1) -> ResidualMoments:
    if N < 2:
        raise ValueError("need at least two samples")
    U = as_orthogonal(U)
    n = U.shape[0]

    def work(rows, st):
        X, Y, phi, psi = draw_untied(U, rows, st)
        Z2 = _residual_rows(X, Y, phi, psi) ** 2
        tot = Z2.sum(axis=1)
        return Z2.sum(axis=0), (Z2**2).sum(axis=0), tot.sum(), (tot**2).sum()

    parts = map_chunks(work, N, n, s, threads)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    t1 = sum(p[2] for p in parts)
    t2 = sum(p[3] for p in parts)
    mean = s1 / N
    var = np.maximum(s2 - N * mean**2, 0.0) / (N - 1)
    tmean = t1 / N
    tvar = max(t2 - N * tmean**2, 0.0) / (N - 1)
    return ResidualMoments(
        per_coordinate_second_moment=mean,
        total_second_moment=float(mean.sum()),
        sample_count=N,
        standard_errors=np.sqrt(var / N),
        total_standard_error=float(np.sqrt(tvar / N)),
    )


def estimate_distribution(U, N: int, s: RandomStream, threads: int = 1) -> EmpiricalDistribution:
    if N < 1:
        raise ValueError("need at least one sample")
    U = as_orthogonal(U)
    n = U.shape[0]

    def work(rows, st):
        X, Y, phi, psi = draw_untied(U, rows, st)
        perms, counts = np.unique(match_orders(phi, psi), axis=0, return_counts=True)
        return perms, counts

    dist = EmpiricalDistribution()
    for perms, counts in map_chunks(work, N, n, s, threads):
        for img, c in zip(perms, counts):
            dist.add(Permutation._trusted(img), int(c))
    return dist
