import itertools
import math

import numpy as np
import pytest

from permround.core import MatrixFormatError, Permutation, compose, perm_to_matrix
from permround.gaussian import RandomStream, haar_orthogonal
from permround.qap import (
    BRUTE_FORCE_MAX_N,
    NotSymmetricError,
    QapInstance,
    brute_force,
    counterexample,
    eigenvalue_bound,
    format_instance,
    objective,
    objective_orthogonal,
    orthogonal_minimizer,
    parse_instance,
    random_instance,
    rounding_heuristic,
    symmetrize,
)


def all_perms(n):
    return [Permutation(p) for p in itertools.permutations(range(n))]


def test_objective_identity_instance():
    inst = QapInstance(np.eye(3), np.eye(3))
    assert all(objective(inst, p) == 3.0 for p in all_perms(3))


def test_objective_direct_sum(rng):
    inst = random_instance(4, rng)
    assert objective(inst, Permutation.identity(4)) == pytest.approx(float(np.sum(inst.A * inst.B)), rel=1e-14)


def test_objective_definition(rng):
    inst = random_instance(5, rng)
    for p in all_perms(5)[:: 7]:
        P = perm_to_matrix(p)
        assert objective(inst, p) == pytest.approx(np.sum(inst.A * (P @ inst.B @ P.T)), rel=1e-12, abs=1e-12)


def test_restriction_consistency(rng):
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        inst = random_instance(n, rng)
        p = Permutation(rng.permutation(n))
        assert objective_orthogonal(inst, perm_to_matrix(p)) == pytest.approx(objective(inst, p), rel=1e-12, abs=1e-12)


def test_objective_orthogonal_rotation():
    D = np.diag([1.0, 0.0])
    inst = QapInstance(D, D)
    U = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert objective_orthogonal(inst, U) == 0.0


def test_conjugation_invariance(rng):
    # relabel A by rho and sigma by rho together
    for _ in range(50):
        inst = random_instance(5, rng)
        rho = Permutation(rng.permutation(5))
        R = perm_to_matrix(rho)
        moved = QapInstance(R @ inst.A @ R.T, inst.B)
        sigma = Permutation(rng.permutation(5))
        assert objective(moved, compose(rho, sigma)) == pytest.approx(objective(inst, sigma), rel=1e-12, abs=1e-12)


def test_symmetry_required():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NotSymmetricError):
        QapInstance(A, np.eye(2))
    inst = QapInstance(symmetrize(A), np.eye(2))
    assert np.array_equal(inst.A, [[0, 0.5], [0.5, 0]])


def test_eigenvalue_bound_identity():
    assert eigenvalue_bound(QapInstance(np.eye(3), np.eye(3))) == pytest.approx(3.0)


def test_eigenvalue_bound_diag_pairs_antisorted():
    inst = QapInstance(np.diag([2.0, 1.0]), np.diag([2.0, 1.0]))
    assert eigenvalue_bound(inst) == pytest.approx(4.0)
    U = orthogonal_minimizer(inst)
    assert objective_orthogonal(inst, U) == pytest.approx(4.0)
    # the minimizer swaps the two axes (up to signs)
    assert np.allclose(np.abs(U), [[0, 1], [1, 0]])


def test_bound_below_brute_force(rng):
    for _ in range(100):
        inst = random_instance(5, rng)
        assert eigenvalue_bound(inst) <= brute_force(inst)[1] + 1e-10


def test_bound_below_every_permutation(rng):
    for t in range(200):
        n = 2 + t % 5
        inst = random_instance(n, rng)
        lb = eigenvalue_bound(inst)
        assert all(lb <= objective(inst, p) + 1e-10 for p in all_perms(n))


def test_minimizer_attains_bound(rng):
    for _ in range(100):
        inst = random_instance(6, rng)
        U = orthogonal_minimizer(inst)
        lb = eigenvalue_bound(inst)
        assert np.max(np.abs(U.T @ U - np.eye(6))) <= 1e-10
        assert abs(objective_orthogonal(inst, U) - lb) <= 1e-6 * max(1.0, abs(lb))


def test_minimizer_optimal_against_haar():
    inst = random_instance(6, np.random.default_rng(3))
    lb = eigenvalue_bound(inst)
    s = RandomStream(4)
    U0 = orthogonal_minimizer(inst)
    for _ in range(10_000):
        V = haar_orthogonal(6, s)
        assert objective_orthogonal(inst, V) >= lb - 1e-8
    # small perturbations of the minimizer never go below either
    for _ in range(200):
        Q, _ = np.linalg.qr(np.eye(6) + 1e-3 * s.normal((6, 6)))
        assert objective_orthogonal(inst, U0 @ Q) >= lb - 1e-8


def test_brute_force_examples():
    p, v = brute_force(QapInstance(np.eye(4), np.eye(4)))
    assert v == 4.0
    p, v = brute_force(QapInstance(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])))
    assert v == 10.0 and p == Permutation([1, 0])
    with pytest.raises(ValueError):
        brute_force(QapInstance(np.eye(BRUTE_FORCE_MAX_N + 1), np.eye(BRUTE_FORCE_MAX_N + 1)))


def test_brute_force_matches_enumeration(rng):
    inst = random_instance(5, rng)
    vals = [objective(inst, p) for p in all_perms(5)]
    assert brute_force(inst)[1] == pytest.approx(min(vals), rel=1e-12)


def test_counterexample_m1():
    inst = counterexample(1)
    assert np.array_equal(inst.A, np.ones((2, 2)))
    assert np.array_equal(inst.B, np.diag([1.0, -1.0]))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_counterexample_gap(m):
    inst = counterexample(m)
    n = 2 * m
    assert abs(eigenvalue_bound(inst) + n * n / 2) <= 1e-8
    assert all(objective(inst, p) == 0.0 for p in all_perms(n))
    assert brute_force(inst)[1] == 0.0
    U = orthogonal_minimizer(inst)
    assert abs(objective_orthogonal(inst, U) + n * n / 2) <= 1e-8
    # the range over O_n is symmetric: flipping B's sign maps min to max
    flipped = QapInstance(inst.A, -inst.B)
    assert abs(objective_orthogonal(inst, orthogonal_minimizer(flipped)) - n * n / 2) <= 1e-8


def test_rounding_heuristic_validity(rng):
    for t in range(20):
        n = 3 + t % 5
        inst = random_instance(n, rng)
        res = rounding_heuristic(inst, 100, RandomStream(t))
        assert res.lower_bound <= res.best_value + 1e-8
        assert res.best_value <= objective(inst, Permutation.identity(n)) + 1e-12
        assert res.best_value >= brute_force(inst)[1] - 1e-10
        assert res.best_value == pytest.approx(objective(inst, res.best_permutation), rel=1e-12, abs=1e-12)


def test_rounding_heuristic_deterministic(rng):
    inst = random_instance(6, rng)
    a = rounding_heuristic(inst, 200, RandomStream(9))
    b = rounding_heuristic(inst, 200, RandomStream(9))
    assert a.best_permutation == b.best_permutation and a.best_value == b.best_value


def test_rounding_heuristic_on_counterexample():
    res = rounding_heuristic(counterexample(2), 100, RandomStream(1))
    assert res.lower_bound == pytest.approx(-8.0, abs=1e-8)
    assert res.best_value == 0.0
    assert res.gap == pytest.approx(8.0)


def test_rounding_heuristic_recovery_report(rng):
    # B = rho^{-1} A rho: reports the recovery rate, asserts only validity
    hits = 0
    for _ in range(30):
        A = random_instance(5, rng).A
        rho = perm_to_matrix(Permutation(rng.permutation(5)))
        inst = QapInstance(A, -rho.T @ A @ rho)
        res = rounding_heuristic(inst, 200, RandomStream(int(rng.integers(1 << 30))))
        best = brute_force(inst)[1]
        assert eigenvalue_bound(inst) - 1e-8 <= res.best_value
        hits += math.isclose(res.best_value, best, rel_tol=1e-9, abs_tol=1e-9)
    print(f"recovered the optimum in {hits}/30 instances")


def test_instance_io_roundtrip(rng):
    inst = random_instance(4, rng)
    for fmt in ("text", "json"):
        back = parse_instance(format_instance(inst, fmt))
        assert np.array_equal(back.A, inst.A) and np.array_equal(back.B, inst.B)
    with pytest.raises(MatrixFormatError):
        parse_instance("2\n1 2 3\n")
