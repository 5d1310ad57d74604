"""Seeded Gaussian sampling, the normal CDF and its inverse, Haar matrices.

Every Gaussian variate is produced by inversion: a 53-bit uniform from a
Philox counter-based generator is pushed through :func:`gaussian_icdf`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_TWO53 = float(2**53)


class RandomStream:
    """Reproducible stream of random numbers keyed by ``(seed, stream_id)``.

    Streams with different ``stream_id`` (or children obtained through
    :meth:`spawn`) draw from statistically independent Philox keys.
    A stream is meant to be owned by one worker at a time.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, *, _seq: np.random.SeedSequence | None = None):
        if _seq is None:
            if seed < 0 or stream_id < 0:
                raise ValueError("seed and stream_id must be non-negative")
            _seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._seq = _seq
        self._gen = np.random.Generator(np.random.Philox(_seq))

    def spawn(self, count: int) -> list[RandomStream]:
        """Return ``count`` fresh independent child streams.

        Spawning is itself sequential: a second call yields different
        children than the first.
        """
        return [RandomStream(self.seed, self.stream_id, _seq=child) for child in self._seq.spawn(count)]

    def uniform(self, size) -> np.ndarray:
        """Uniforms on the open interval (0, 1) with 53-bit resolution."""
        k = self._gen.integers(0, 2**53, size=size, dtype=np.int64)
        return (k + 0.5) / _TWO53

    def normal(self, size) -> np.ndarray:
        return gaussian_icdf(self.uniform(size))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, key={self._seq.spawn_key})"


def sample_gaussian_vector(n: int, s: RandomStream) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return s.normal(n)


def gaussian_pdf(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t) / _SQRT2PI


def gaussian_cdf(t):
    """Standard normal CDF, accurate to roughly 1e-16 relative in both tails."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * erfc(-t / _SQRT2)
    return float(out) if out.ndim == 0 else out


# Acklam's rational approximation, relative error below 1.15e-9
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _icdf_lower_half(p: np.ndarray) -> np.ndarray:
    # valid for 0 < p <= 0.5
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = num / den
    # one Newton step against the erfc-based CDF
    x -= (0.5 * erfc(-x / _SQRT2) - p) * _SQRT2PI * np.exp(0.5 * x * x)
    return x


def gaussian_icdf(p):
    """Inverse standard normal CDF on the open interval (0, 1).

    Exactly antisymmetric: ``gaussian_icdf(1 - p) == -gaussian_icdf(p)``
    whenever ``1 - p`` is representable.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("gaussian_icdf requires 0 < p < 1")
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    x = _icdf_lower_half(np.atleast_1d(q)).reshape(q.shape)
    x = np.where(upper, -x, x)
    return float(x) if x.ndim == 0 else x


def haar_orthogonal(n: int, s: RandomStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR of a Gaussian matrix."""
    if n < 1:
        raise ValueError("n must be positive")
    G = s.normal((n, n))
    Q, R = np.linalg.qr(G)
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    return Q * signs


def coordinate_tail_bound(t: float) -> float:
    """Bound ``2 exp(-t^2/2)`` on the probability that a coordinate exceeds ``t`` in modulus."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return 2.0 * math.exp(-0.5 * t * t)


def norm_concentration_bound(n: int, eps: float) -> tuple[float, float, float]:
    """Thresholds and probability bound for ``|x|^2`` under the standard Gaussian.

    Returns ``(n/(1-eps), (1-eps) n, exp(-eps^2 n / 4))``: both
    ``P(|x|^2 > n/(1-eps))`` and ``P(|x|^2 <= (1-eps) n)`` are at most the
    third value.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return n / (1.0 - eps), (1.0 - eps) * n, math.exp(-eps * eps * n / 4.0)
