"""Matrix and permutation primitives.

Permutation matrix convention
-----------------------------
A permutation ``sigma`` is associated with the matrix ``P`` where

    P[i, j] = 1  if sigma(j) = i,  else 0.

So ``P @ x`` moves the entry ``x[j]`` to position ``sigma(j)``, and the
matrix of ``rho o sigma`` is ``P(rho) @ P(sigma)``. Every equivariance
property in this package depends on this choice.

Internally images are stored 0-based (``image[j] = sigma(j)``); one-line
text notation is 1-based (``"2 1 3"`` is the transposition of the first
two points).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

ORTHOGONALITY_TOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible sizes."""


class NotOrthogonalError(ValueError):
    """Matrix fails the orthogonality check."""


class MatrixFormatError(ValueError):
    """Text or JSON input could not be parsed into a matrix/permutation."""


class Permutation:
    """Immutable bijection of ``{0, ..., n-1}`` stored as its image array."""

    __slots__ = ("_image", "_key")

    def __init__(self, image):
        arr = np.array(image, dtype=np.int64).reshape(-1)
        n = arr.size
        if n < 1:
            raise ValueError("permutation must act on at least one point")
        seen = np.zeros(n, dtype=bool)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError(f"image values must lie in 0..{n - 1}")
        seen[arr] = True
        if not seen.all():
            raise ValueError("image is not a bijection")
        arr.setflags(write=False)
        self._image = arr
        self._key = arr.tobytes()

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    @classmethod
    def from_one_line(cls, text: str) -> Permutation:
        """Parse 1-based one-line notation such as ``"2 1 3"``."""
        try:
            values = [int(tok) for tok in text.split()]
        except ValueError as exc:
            raise MatrixFormatError(f"bad permutation text: {text!r}") from exc
        return cls(np.array(values) - 1)

    @classmethod
    def _trusted(cls, image: np.ndarray) -> Permutation:
        # skips the bijection scan; callers guarantee validity
        obj = cls.__new__(cls)
        arr = np.array(image, dtype=np.int64)
        arr.setflags(write=False)
        obj._image = arr
        obj._key = arr.tobytes()
        return obj

    @property
    def image(self) -> np.ndarray:
        return self._image

    @property
    def n(self) -> int:
        return self._image.size

    def __call__(self, j: int) -> int:
        return int(self._image[j])

    def inverse(self) -> Permutation:
        inv = np.empty_like(self._image)
        inv[self._image] = np.arange(self.n)
        return Permutation._trusted(inv)

    def matrix(self) -> np.ndarray:
        return perm_to_matrix(self)

    def one_line(self) -> str:
        return " ".join(str(int(v) + 1) for v in self._image)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._image, np.arange(self.n)))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycle decomposition (0-based), fixed points included."""
        done = np.zeros(self.n, dtype=bool)
        out = []
        for start in range(self.n):
            if done[start]:
                continue
            cyc = []
            j = start
            while not done[j]:
                done[j] = True
                cyc.append(j)
                j = int(self._image[j])
            out.append(tuple(cyc))
        return out

    def __mul__(self, other: Permutation) -> Permutation:
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Permutation([{self.one_line()}])"


def perm_to_matrix(sigma: Permutation) -> np.ndarray:
    n = sigma.n
    P = np.zeros((n, n))
    P[sigma.image, np.arange(n)] = 1.0
    return P


def apply_perm(sigma: Permutation, x) -> np.ndarray:
    """Return ``perm_to_matrix(sigma) @ x`` without forming the matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sigma.n,):
        raise DimensionError(f"vector of length {x.shape} for permutation of {sigma.n}")
    out = np.empty_like(x)
    out[sigma.image] = x
    return out


def compose(rho: Permutation, sigma: Permutation) -> Permutation:
    """``(rho o sigma)(j) = rho(sigma(j))``."""
    if rho.n != sigma.n:
        raise DimensionError(f"cannot compose permutations of {rho.n} and {sigma.n}")
    return Permutation._trusted(rho.image[sigma.image])


def as_square(B) -> np.ndarray:
    """Validate and return a finite square float64 matrix."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix has non-finite entries")
    return B


def orthogonality_defect(U) -> float:
    U = np.asarray(U, dtype=float)
    return float(np.max(np.abs(U.T @ U - np.eye(U.shape[0]))))


def as_orthogonal(U, tol: float = ORTHOGONALITY_TOL) -> np.ndarray:
    """Validate that ``U`` is square with ``max|U^T U - I| <= tol``."""
    U = as_square(U)
    defect = orthogonality_defect(U)
    if defect > tol:
        raise NotOrthogonalError(f"matrix is not orthogonal: max|U^T U - I| = {defect:.3e} exceeds {tol:.0e}")
    return U


def norm_inf(B) -> float:
    return float(np.max(np.abs(B)))


def norm_frobenius(B) -> float:
    return float(np.sqrt(np.sum(np.square(B))))


def column_norms(B) -> np.ndarray:
    return np.sqrt(np.sum(np.square(B), axis=0))


# --- I/O -------------------------------------------------------------------


def parse_matrix(text: str) -> np.ndarray:
    """Parse plain text (``n`` then ``n`` rows) or the JSON mirror."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
            n = int(obj["n"])
            rows = np.array(obj["rows"], dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise MatrixFormatError(f"bad JSON matrix: {exc}") from exc
    else:
        lines = [ln for ln in stripped.splitlines() if ln.strip()]
        if not lines:
            raise MatrixFormatError("empty matrix file")
        try:
            n = int(lines[0])
            rows = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        except ValueError as exc:
            raise MatrixFormatError(f"bad matrix text: {exc}") from exc
    if n < 1 or rows.shape != (n, n):
        raise MatrixFormatError(f"header says n={n} but found rows of shape {rows.shape}")
    return rows


def format_matrix(B, fmt: str = "text") -> str:
    B = as_square(B)
    n = B.shape[0]
    if fmt == "json":
        return json.dumps({"n": n, "rows": B.tolist()})
    body = "\n".join(" ".join(repr(float(v)) for v in row) for row in B)
    return f"{n}\n{body}\n"


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def write_matrix(path, B, fmt: str = "text") -> None:
    Path(path).write_text(format_matrix(B, fmt))
