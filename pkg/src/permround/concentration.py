"""Tail bounds for order statistics and simulators that check them.

``omega_k`` denotes the k-th smallest of ``n`` i.i.d. draws with CDF ``F``.
The calculators here are pure formula evaluators; the simulators draw
standard Gaussians so the two can be compared on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._sampling import map_chunks
from .gaussian import RandomStream, gaussian_icdf

GAP_CONSTANT = math.sqrt(8.0 * math.pi)


class PreconditionError(ValueError):
    """Arguments fall outside the hypotheses under which a bound holds."""


@dataclass(frozen=True)
class OrderStatBound:
    k: int
    n: int
    epsilon: float
    alpha_minus: float
    alpha_plus: float
    lower_tail_bound: float
    upper_tail_bound: float
    gap_bound: float

    @property
    def gap(self) -> float:
        return self.alpha_plus - self.alpha_minus


def _check_rank(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise PreconditionError(f"rank k={k} outside 1..{n}")


def chernoff_order_stat_lower(k: int, n: int, F_alpha: float) -> float:
    """Bound on ``P(omega_k < alpha)`` given ``F(alpha) < k/n < 2 F(alpha)``.

    At ``F(alpha) = k/n`` exactly the bound degenerates to 1 and is
    returned as such.
    """
    _check_rank(k, n)
    r = k / n
    if F_alpha == r:
        return 1.0
    if not (0.0 < F_alpha < r < 2.0 * F_alpha):
        raise PreconditionError(f"need F(alpha) < k/n < 2F(alpha); got F={F_alpha}, k/n={r}")
    return math.exp(-n / (3.0 * F_alpha) * (r - F_alpha) ** 2)


def chernoff_order_stat_upper(k: int, n: int, F_alpha: float) -> float:
    """Bound on ``P(omega_k > alpha)`` given ``F(alpha) > k/n``."""
    _check_rank(k, n)
    r = k / n
    if F_alpha == r:
        return 1.0
    if not (r < F_alpha < 1.0):
        raise PreconditionError(f"need k/n < F(alpha) < 1; got F={F_alpha}, k/n={r}")
    return math.exp(-n / (2.0 * F_alpha) * (r - F_alpha) ** 2)


def corollary_tails(k: int, n: int, eps: float) -> tuple[float, float]:
    """Bounds on ``P(omega_k < alpha^-)`` and ``P(omega_k > alpha^+)``.

    ``alpha^-`` and ``alpha^+`` solve ``F = (1 -/+ eps) k / n``. Requires
    ``1 <= k <= n/2`` and ``0 < eps < 1/2``.
    """
    _check_rank(k, n)
    if 2 * k > n:
        raise PreconditionError(f"need k <= n/2, got k={k}, n={n}")
    if not 0.0 < eps < 0.5:
        raise PreconditionError(f"need 0 < eps < 1/2, got {eps}")
    e2k = eps * eps * k
    return math.exp(-e2k / (3.0 * (1.0 - eps))), math.exp(-e2k / (2.0 * (1.0 + eps)))


def gaussian_order_stat_bound(k: int, n: int, eps: float) -> OrderStatBound:
    _check_rank(k, n)
    if 2 * k > n:
        raise PreconditionError(f"need k <= n/2, got k={k}, n={n}")
    if not 0.0 < eps < 0.5:
        raise PreconditionError(f"need 0 < eps < 1/2, got {eps}")
    a_minus = gaussian_icdf((1.0 - eps) * k / n)
    a_plus = gaussian_icdf((1.0 + eps) * k / n)
    tail = math.exp(-eps * eps * k / 3.0)
    gap_bound = eps * GAP_CONSTANT / (1.0 - eps)
    if not 0.0 <= a_plus - a_minus <= gap_bound:
        raise ArithmeticError(f"threshold gap {a_plus - a_minus} violates bound {gap_bound}")
    return OrderStatBound(k, n, eps, a_minus, a_plus, tail, tail, gap_bound)


def epsilon_schedule(k: int, n: int) -> float:
    """``3 sqrt(ln n / k)``: the accuracy that makes the tail bound ``n^-3``."""
    return 3.0 * math.sqrt(math.log(n) / k)


def check_epsilon_schedule(n: int) -> list[tuple[int, float, float, bool]]:
    """For each admissible ``36 ln n <= k <= n/2`` return ``(k, eps_k, bound, bound <= n^-3)``."""
    target = float(n) ** -3
    out = []
    for k in range(math.ceil(36.0 * math.log(n)), n // 2 + 1):
        eps = epsilon_schedule(k, n)
        bound = math.exp(-eps * eps * k / 3.0)
        out.append((k, eps, bound, eps <= 0.5 and bound <= target * (1.0 + 1e-12)))
    return out


def simulate_order_stat(k, n: int, trials: int, s: RandomStream, threads: int = 1) -> np.ndarray:
    """Per-trial k-th smallest of ``n`` standard Gaussians.

    ``k`` may be a sequence of ranks; the result then has one column per
    rank, all read off the same draws.
    """
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    for kk in ks:
        _check_rank(int(kk), n)
    if trials < 1:
        raise ValueError("trials must be positive")

    def work(rows, st):
        V = st.normal((rows, n))
        V.sort(axis=1)
        return V[:, ks - 1]

    out = np.concatenate(map_chunks(work, trials, n, s, threads), axis=0)
    return out[:, 0] if np.ndim(k) == 0 else out


@dataclass(frozen=True)
class TailCheck:
    """One grid point: closed-form bounds against simulated frequencies."""

    n: int
    k: int
    epsilon: float
    alpha_minus: float
    alpha_plus: float
    trials: int
    lower_empirical: float
    upper_empirical: float
    lower_bound: float
    upper_bound: float
    corollary_lower: float
    corollary_upper: float
    gap_ok: bool

    @property
    def empirical(self) -> float:
        return self.lower_empirical + self.upper_empirical

    @property
    def bound(self) -> float:
        return self.lower_bound + self.upper_bound

    def _sd(self, p: float) -> float:
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def passes(self, n_sd: float = 3.0) -> bool:
        pairs = [
            (self.lower_empirical, self.corollary_lower),
            (self.upper_empirical, self.corollary_upper),
            (self.lower_empirical, self.lower_bound),
            (self.upper_empirical, self.upper_bound),
            (self.empirical, self.bound),
        ]
        return self.gap_ok and all(emp <= b + n_sd * self._sd(b) for emp, b in pairs)


DEFAULT_N_VALUES = (100, 1000)
DEFAULT_EPSILONS = (0.1, 0.2, 0.4)


def default_ranks(n: int) -> list[int]:
    """``ceil(36 ln n)``, ``n/4``, ``n/2``, keeping only ranks with ``k <= n/2``."""
    ks = [math.ceil(36.0 * math.log(n)), n // 4, n // 2]
    return sorted({k for k in ks if 1 <= k <= n // 2})


def run_grid(
    s: RandomStream,
    n_values=DEFAULT_N_VALUES,
    epsilons=DEFAULT_EPSILONS,
    trials: int | dict[int, int] = 20000,
    ranks=None,
    threads: int = 1,
) -> list[TailCheck]:
    """Simulate every grid point; one set of draws per ``n`` serves all ranks."""
    rows = []
    for n in n_values:
        ks = list(ranks(n) if callable(ranks) else (ranks or default_ranks(n)))
        ks = [k for k in ks if 1 <= k <= n // 2]
        if not ks:
            continue
        t = trials[n] if isinstance(trials, dict) else trials
        omega = simulate_order_stat(ks, n, t, s.spawn(1)[0], threads)
        for j, k in enumerate(ks):
            for eps in epsilons:
                b = gaussian_order_stat_bound(k, n, eps)
                lo = float(np.mean(omega[:, j] < b.alpha_minus))
                hi = float(np.mean(omega[:, j] > b.alpha_plus))
                cl, cu = corollary_tails(k, n, eps)
                rows.append(TailCheck(
                    n=n, k=k, epsilon=eps, alpha_minus=b.alpha_minus, alpha_plus=b.alpha_plus,
                    trials=t, lower_empirical=lo, upper_empirical=hi,
                    lower_bound=b.lower_tail_bound, upper_bound=b.upper_tail_bound,
                    corollary_lower=cl, corollary_upper=cu,
                    gap_ok=0.0 <= b.gap <= b.gap_bound,
                ))
    return rows
