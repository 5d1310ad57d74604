"""Quadratic assignment: ``f(sigma) = <A, P(sigma) B P(sigma)^T>`` for symmetric ``A``, ``B``.

Extending ``f`` to the orthogonal group gives a relaxation solved exactly
by eigendecomposition; rounding the relaxed minimizer gives candidate
permutations.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from ._sampling import draw_untied, map_chunks, match_orders
from .core import DimensionError, MatrixFormatError, Permutation, as_square
from .gaussian import RandomStream

SYMMETRY_TOL = 1e-10
BRUTE_FORCE_MAX_N = 8


class NotSymmetricError(ValueError):
    pass


def symmetrize(A) -> np.ndarray:
    A = as_square(A)
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class QapInstance:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_square(self.A)
        B = as_square(self.B)
        if A.shape != B.shape:
            raise DimensionError(f"A is {A.shape}, B is {B.shape}")
        for name, M in (("A", A), ("B", B)):
            asym = float(np.max(np.abs(M - M.T)))
            if asym > SYMMETRY_TOL:
                raise NotSymmetricError(f"{name} is not symmetric (max asymmetry {asym:.2e}); see symmetrize()")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @cached_property
    def eig_A(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues of A descending with matching eigenvector columns."""
        return _eig_descending(self.A)

    @cached_property
    def eig_B(self) -> tuple[np.ndarray, np.ndarray]:
        return _eig_descending(self.B)


@dataclass(frozen=True)
class QapResult:
    lower_bound: float
    orthogonal_minimizer: np.ndarray
    best_permutation: Permutation
    best_value: float
    samples_used: int
    distinct_evaluated: int

    @property
    def gap(self) -> float:
        return self.best_value - self.lower_bound

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "best_value": self.best_value,
            "gap": self.gap,
            "permutation": self.best_permutation.one_line(),
            "samples_used": self.samples_used,
            "distinct_evaluated": self.distinct_evaluated,
        }


def _eig_descending(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"symmetric eigensolve failed: {exc}") from exc
    # eigh returns ascending order; a stable sort keeps ties in index order
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def objective(inst: QapInstance, sigma: Permutation) -> float:
    if sigma.n != inst.n:
        raise DimensionError(f"permutation of {sigma.n} for instance of size {inst.n}")
    s = sigma.image
    # (P B P^T)[s_i, s_j] = B[i, j]
    return float(np.sum(inst.A[np.ix_(s, s)] * inst.B))


def objective_orthogonal(inst: QapInstance, U) -> float:
    U = np.asarray(U, dtype=float)
    if U.shape != inst.A.shape:
        raise DimensionError(f"U is {U.shape} for instance of size {inst.n}")
    return float(np.sum(inst.A * (U @ inst.B @ U.T)))


def _objective_many(inst: QapInstance, images: np.ndarray) -> np.ndarray:
    A = inst.A
    return np.einsum("mij,ij->m", A[images[:, :, None], images[:, None, :]], inst.B)


def eigenvalue_bound(inst: QapInstance) -> float:
    """``sum_i lambda_i mu_{n+1-i}`` with both spectra sorted descending."""
    lam = inst.eig_A[0]
    mu = inst.eig_B[0]
    return float(np.dot(lam, mu[::-1]))


def orthogonal_minimizer(inst: QapInstance) -> np.ndarray:
    """Orthogonal ``U`` attaining the eigenvalue bound.

    With ``U1 B U1^T = diag(mu desc)`` and ``U2 A U2^T = diag(lambda asc)``
    the minimizer is ``U2^T U1``.
    """
    _, VA = inst.eig_A
    _, VB = inst.eig_B
    U1 = VB.T
    U2 = VA[:, ::-1].T
    return U2.T @ U1


def brute_force(inst: QapInstance) -> tuple[Permutation, float]:
    """Exact minimum over all ``n!`` permutations; first minimizer in lexicographic order."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    best_img, best_val = None, math.inf
    perms = itertools.permutations(range(n))
    while True:
        block = np.array(list(itertools.islice(perms, 5040)), dtype=np.int64)
        if block.size == 0:
            break
        vals = _objective_many(inst, block)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_img = float(vals[i]), block[i]
    return Permutation(best_img), best_val


def rounding_heuristic(inst: QapInstance, N: int = 100, s: RandomStream | None = None) -> QapResult:
    """Round the relaxed minimizer at ``N`` Gaussian points and keep the best permutation.

    The identity permutation is always evaluated as a baseline.
    """
    if N < 1:
        raise ValueError("need at least one sample")
    if s is None:
        s = RandomStream(0)
    n = inst.n
    U = orthogonal_minimizer(inst)

    def work(rows, st):
        _, _, phi, psi = draw_untied(U, rows, st)
        return np.unique(match_orders(phi, psi), axis=0)

    cands = np.concatenate([np.arange(n)[None, :], *map_chunks(work, N, n, s)], axis=0)
    cands = np.unique(cands, axis=0)
    vals = _objective_many(inst, cands)
    i = int(np.argmin(vals))
    return QapResult(
        lower_bound=eigenvalue_bound(inst),
        orthogonal_minimizer=U,
        best_permutation=Permutation(cands[i]),
        best_value=float(vals[i]),
        samples_used=N,
        distinct_evaluated=cands.shape[0],
    )


def counterexample(m: int) -> QapInstance:
    """Instance of size ``2m`` where ``f`` vanishes on every permutation.

    The orthogonal relaxation still reaches ``-n^2/2``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    J = np.ones((m, m))
    A = np.kron(np.ones((2, 2)), J)
    B = np.kron(np.diag([1.0, -1.0]), J)
    return QapInstance(A, B)


def random_instance(n: int, rng: np.random.Generator) -> QapInstance:
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    return QapInstance(0.5 * (A + A.T), 0.5 * (B + B.T))


# --- I/O -------------------------------------------------------------------


def parse_instance(text: str) -> QapInstance:
    """QAPLIB-style text (``n``, then A row-wise, then B row-wise) or JSON ``{"n", "A", "B"}``."""
    stripped = text.strip()
    try:
        if stripped.startswith("{"):
            obj = json.loads(stripped)
            n = int(obj["n"])
            A = np.array(obj["A"], dtype=float)
            B = np.array(obj["B"], dtype=float)
        else:
            tokens = stripped.split()
            n = int(tokens[0])
            vals = np.array([float(t) for t in tokens[1:]])
            if vals.size != 2 * n * n:
                raise ValueError(f"expected {2 * n * n} entries, found {vals.size}")
            A = vals[: n * n].reshape(n, n)
            B = vals[n * n :].reshape(n, n)
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise MatrixFormatError(f"bad QAP instance: {exc}") from exc
    if A.shape != (n, n) or B.shape != (n, n):
        raise MatrixFormatError(f"header says n={n}, matrices are {A.shape} and {B.shape}")
    return QapInstance(A, B)


def format_instance(inst: QapInstance, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps({"n": inst.n, "A": inst.A.tolist(), "B": inst.B.tolist()})

    def rows(M):
        return "\n".join(" ".join(repr(float(v)) for v in r) for r in M)

    return f"{inst.n}\n\n{rows(inst.A)}\n\n{rows(inst.B)}\n"


def read_instance(path) -> QapInstance:
    return parse_instance(Path(path).read_text())
