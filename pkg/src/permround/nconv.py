"""Monte Carlo non-commutative convex combinations of permutation matrices.

For Gaussian samples ``x_i`` the weights ``x_i (x) x_i`` are positive
semidefinite and average to the identity, so

    A_hat = (1/N) sum_i (x_i (x) x_i) P(tau_i)

is a sampled non-commutative convex combination. Taking
``tau_i = sigma(U^T, x_i)^{-1}`` makes ``A_hat`` converge to a matrix
``A = sum_tau A_tau tau`` within ``O(ln n / sqrt(n))`` of ``U`` entrywise.

The mirrored orientation ``sum_sigma sigma A_sigma`` uses
``sigma_i = sigma(U, x_i)`` directly and multiplies from the left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._sampling import draw_untied, map_chunks, match_orders
from .core import (
    DimensionError,
    Permutation,
    as_orthogonal,
    as_square,
    column_norms,
    norm_frobenius,
    norm_inf,
    perm_to_matrix,
)
from .gaussian import RandomStream
from .rounding import EmpiricalDistribution

TRACK_MAX_N = 16
FULL_WEIGHTS_MAX_N = 8


@dataclass
class NconvApprox:
    """Sampled approximation together with its diagnostics.

    ``perm_counts`` and ``per_perm_trace`` are keyed by the permutation
    whose matrix appears in the combination (``tau_i`` in the canonical
    orientation). ``per_perm_trace[tau]`` is ``(1/N) sum |x_i|^2`` over
    the samples attached to ``tau``; ``weights[tau]``, when kept, is the
    full ``(1/N) sum x_i (x) x_i`` over the same samples.
    """

    n: int
    sample_count: int
    A_hat: np.ndarray
    weight_sum: np.ndarray
    mirrored: bool = False
    mean_residual_sq: float = float("nan")
    per_perm_trace: dict[Permutation, float] | None = None
    perm_counts: EmpiricalDistribution | None = None
    weights: dict[Permutation, np.ndarray] | None = field(default=None, repr=False)

    @property
    def tracked(self) -> bool:
        return self.perm_counts is not None

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "sample_count": self.sample_count,
            "orientation": "sigma_A" if self.mirrored else "A_sigma",
            "A_hat": self.A_hat.tolist(),
            "weight_sum": self.weight_sum.tolist(),
            "mean_residual_sq": self.mean_residual_sq,
        }
        if self.tracked:
            out["per_perm_trace"] = {p.one_line(): v for p, v in self.per_perm_trace.items()}
            out["perm_counts"] = self.perm_counts.to_dict()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj: dict) -> NconvApprox:
        counts = traces = None
        if "perm_counts" in obj:
            counts = EmpiricalDistribution()
            for key, c in obj["perm_counts"].items():
                counts.add(Permutation.from_one_line(key), int(c))
            traces = {Permutation.from_one_line(k): float(v) for k, v in obj["per_perm_trace"].items()}
        return cls(
            n=int(obj["n"]),
            sample_count=int(obj["sample_count"]),
            A_hat=np.array(obj["A_hat"], dtype=float),
            weight_sum=np.array(obj["weight_sum"], dtype=float),
            mirrored=obj.get("orientation") == "sigma_A",
            mean_residual_sq=float(obj.get("mean_residual_sq", float("nan"))),
            per_perm_trace=traces,
            perm_counts=counts,
        )

    @classmethod
    def from_json(cls, text: str) -> NconvApprox:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ErrorReport:
    linf: float
    frob: float
    column_errors: np.ndarray
    weight_deviation: float

    @property
    def max_column_error(self) -> float:
        return float(self.column_errors.max())

    def to_dict(self) -> dict:
        return {
            "linf": self.linf,
            "frob": self.frob,
            "column_errors": self.column_errors.tolist(),
            "max_column_error": self.max_column_error,
            "weight_deviation": self.weight_deviation,
        }


def outer_product(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"outer product of shapes {x.shape} and {y.shape}")
    return np.outer(x, y)


def approximate(
    U,
    N: int,
    s: RandomStream,
    *,
    mirrored: bool = False,
    track: bool | None = None,
    keep_weights: bool = False,
    threads: int = 1,
) -> NconvApprox:
    """Sample ``N`` Gaussian points and build the approximation of ``U``.

    ``track`` controls the per-permutation bookkeeping; by default it is on
    for ``n <= 16`` only, since at large ``n`` nearly every sample yields a
    new permutation. ``keep_weights`` stores the full weight matrix of every
    observed permutation and is limited to ``n <= 8``.
    """
    if N < 1:
        raise ValueError("need at least one sample")
    U = as_orthogonal(U)
    n = U.shape[0]
    if track is None:
        track = n <= TRACK_MAX_N
    if keep_weights and n > FULL_WEIGHTS_MAX_N:
        raise ValueError(f"keep_weights is limited to n <= {FULL_WEIGHTS_MAX_N}")
    M = U if mirrored else U.T

    def work(rows, st):
        X, Y, phi, psi = draw_untied(M, rows, st)
        idx = np.arange(rows)[:, None]
        Xs = np.take_along_axis(X, phi, axis=1)
        if mirrored:
            # row i of SX is sigma_i x_i
            SX = np.empty_like(X)
            SX[idx, psi] = Xs
            A = SX.T @ X
            perms = match_orders(phi, psi)
            Z = Y - SX
        else:
            # tau_i = sigma_i^{-1}; row i of XT is x_i[tau_i(.)]
            perms = match_orders(psi, phi)
            XT = np.take_along_axis(X, perms, axis=1)
            A = X.T @ XT
            Z = Y.copy()
            Z[idx, psi] -= Xs
        out = {"A": A, "W": X.T @ X, "res": float(np.sum(Z * Z))}
        if track:
            uniq, inv, counts = np.unique(perms, axis=0, return_inverse=True, return_counts=True)
            inv = inv.reshape(-1)
            out["perms"] = uniq
            out["counts"] = counts
            out["traces"] = np.bincount(inv, weights=np.sum(X * X, axis=1), minlength=uniq.shape[0])
            if keep_weights:
                out["weights"] = [X[inv == g].T @ X[inv == g] for g in range(uniq.shape[0])]
        return out

    parts = map_chunks(work, N, n, s, threads)
    A_hat = sum(p["A"] for p in parts) / N
    W = sum(p["W"] for p in parts) / N
    approx = NconvApprox(
        n=n,
        sample_count=N,
        A_hat=A_hat,
        weight_sum=0.5 * (W + W.T),
        mirrored=mirrored,
        mean_residual_sq=sum(p["res"] for p in parts) / N,
    )
    if track:
        counts = EmpiricalDistribution()
        traces: dict[Permutation, float] = {}
        weights: dict[Permutation, np.ndarray] = {}
        for p in parts:
            for g, img in enumerate(p["perms"]):
                perm = Permutation._trusted(img)
                counts.add(perm, int(p["counts"][g]))
                traces[perm] = traces.get(perm, 0.0) + p["traces"][g]
                if keep_weights:
                    weights[perm] = weights.get(perm, 0.0) + p["weights"][g]
        approx.perm_counts = counts
        approx.per_perm_trace = {k: v / N for k, v in traces.items()}
        if keep_weights:
            approx.weights = {k: v / N for k, v in weights.items()}
    return approx


def recombine(approx: NconvApprox) -> np.ndarray:
    """Rebuild ``A_hat`` from the stored per-permutation weights."""
    if approx.weights is None:
        raise ValueError("approximation was built without keep_weights")
    n = approx.n
    total = np.zeros((n, n))
    for perm, Wp in approx.weights.items():
        P = perm_to_matrix(perm)
        total += P @ Wp if approx.mirrored else Wp @ P
    return total


def error_report(U, approx: NconvApprox) -> ErrorReport:
    U = as_square(U)
    if U.shape[0] != approx.n:
        raise DimensionError(f"U is {U.shape[0]}x{U.shape[0]}, approximation is for n={approx.n}")
    D = U - approx.A_hat
    return ErrorReport(
        linf=norm_inf(D),
        frob=norm_frobenius(D),
        column_errors=column_norms(D),
        weight_deviation=norm_inf(approx.weight_sum - np.eye(approx.n)),
    )


def weight_sum_is_psd(approx: NconvApprox, rel_tol: float = 1e-9) -> bool:
    W = approx.weight_sum
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12):
        return False
    ev = np.linalg.eigvalsh(W)
    return bool(ev[0] >= -rel_tol * max(ev[-1], 0.0))


def trace_probability_check(approx: NconvApprox) -> float:
    """Largest gap between normalized weight trace and empirical frequency.

    The weight attached to a permutation has trace ``n`` times its
    probability (the rounding regions are cones, so radius and direction
    decouple); this returns ``max |trace/n - count/N|``.
    """
    if not approx.tracked:
        raise ValueError("approximation was built without permutation tracking")
    N = approx.sample_count
    return max(
        abs(approx.per_perm_trace[p] / approx.n - c / N) for p, c in approx.perm_counts.counts.items()
    )


def pathological_example(n: int, mirrored: bool = False) -> np.ndarray:
    """Combination far from the convex hull of the orthogonal group.

    Weights: projection onto coordinate 1 for the identity, projection onto
    coordinate k for the transposition (1 k). They resolve the identity,
    yet the result has operator norm ``sqrt(n)``. In the ``A_sigma sigma``
    orientation the first column is all ones; with ``mirrored`` the
    ``sigma A_sigma`` orientation puts the ones in the first row.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    terms = []
    for k in range(n):
        proj = np.zeros((n, n))
        proj[k, k] = 1.0
        image = np.arange(n)
        image[0], image[k] = k, 0
        terms.append((proj, Permutation(image)))
    assert np.array_equal(sum(p for p, _ in terms), np.eye(n))
    if mirrored:
        A = sum(perm_to_matrix(sigma) @ proj for proj, sigma in terms)
    else:
        A = sum(proj @ perm_to_matrix(sigma) for proj, sigma in terms)
    expected = np.zeros((n, n))
    expected[0, :] = 1.0
    if not mirrored:
        expected = expected.T
    assert np.array_equal(A, expected)
    return A


def frobenius_via_gaussian(L, N: int, s: RandomStream) -> tuple[float, float]:
    """Estimate ``|L|_F^2 = E |L a|^2`` for Gaussian ``a``.

    Returns ``(estimate, standard_error)``.
    """
    if N < 2:
        raise ValueError("need at least two samples")
    L = as_square(L)
    n = L.shape[0]

    def work(rows, st):
        a = st.normal((rows, n))
        v = np.sum((a @ L.T) ** 2, axis=1)
        return v.sum(), (v**2).sum()

    parts = map_chunks(work, N, n, s)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / N
    var = max(s2 - N * mean**2, 0.0) / (N - 1)
    return float(mean), float(np.sqrt(var / N))
