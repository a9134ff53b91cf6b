from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_schur, random_pd
from ringclt.errors import BadIndexSet, NotPositiveDefinite, NotPositiveSemiDefinite, NotSymmetric
from ringclt.intervals import IntervalSet
from ringclt.linalg import cholesky, invert, min_eigenvalue, schur_conditional, schur_conditional_cov


def test_cholesky_identity():
    f = cholesky(np.eye(3))
    assert np.array_equal(f.lower, np.eye(3))
    assert f.rank == 3


def test_cholesky_known_factor():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    f = cholesky(m)
    assert np.allclose(f.lower, [[2.0, 0.0], [1.0, math.sqrt(2.0)]], atol=1e-15)
    assert np.max(np.abs(f.lower @ f.lower.T - m)) <= 1e-12
    assert f.triangular


def test_cholesky_indefinite():
    with pytest.raises(NotPositiveSemiDefinite):
        cholesky([[1.0, 2.0], [2.0, 1.0]])


def test_cholesky_rank_deficient_falls_back():
    v = np.array([1.0, 1.0, 0.0])
    m = np.outer(v, v) + np.diag([0.0, 0.0, 2.0])
    f = cholesky(m)
    assert f.rank == 2
    assert np.allclose(f.lower @ f.lower.T, m, atol=1e-12)


def test_asymmetric_rejected():
    with pytest.raises(NotSymmetric):
        cholesky([[1.0, 0.5], [0.0, 1.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_cholesky_reconstructs(dim, seed):
    m = random_pd(np.random.default_rng(seed), dim)
    f = cholesky(m)
    assert np.linalg.norm(f.lower @ f.lower.T - m) / np.linalg.norm(m) <= 1e-8


@pytest.mark.parametrize(
    "m, expected",
    [(np.eye(5), 1.0), ([[2.0, 1.0], [1.0, 2.0]], 1.0), (np.diag([3.0, 5.0]), 3.0)],
)
def test_min_eigenvalue(m, expected):
    assert min_eigenvalue(m) == pytest.approx(expected, abs=1e-10 * (1 + np.trace(np.asarray(m)) / len(m)))


def test_invert_examples():
    assert np.allclose(invert(np.eye(4)), np.eye(4))
    assert np.allclose(invert(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    inv = invert(m)
    assert np.allclose(inv, np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0, atol=1e-15)
    assert np.max(np.abs(m @ inv - np.eye(2))) <= 1e-8


def test_invert_singular():
    with pytest.raises(NotPositiveDefinite):
        invert([[1.0, 1.0], [1.0, 1.0]])


def test_schur_block_diagonal_is_marginal():
    blocks = [np.array([[2.0, 0.3], [0.3, 1.0]]), np.eye(2), np.array([[1.5, -0.2], [-0.2, 0.7]])]
    joint = np.zeros((6, 6))
    for i, b in enumerate(blocks):
        joint[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = b
    got = schur_conditional_cov(joint, 3, 2, IntervalSet(1, 2))
    assert np.allclose(got, blocks[0] + blocks[1], atol=1e-14)


def test_schur_tridiagonal_middle():
    joint = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]])
    assert schur_conditional_cov(joint, 3, 1, IntervalSet(2, 2))[0, 0] == pytest.approx(0.5, abs=1e-14)


def test_schur_full_interval_is_var_sum():
    joint = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]])
    assert schur_conditional_cov(joint, 3, 1, IntervalSet(1, 3))[0, 0] == pytest.approx(5.0)


def test_schur_bad_index():
    with pytest.raises(BadIndexSet):
        schur_conditional_cov(np.eye(3), 3, 1, IntervalSet(2, 4))
    with pytest.raises(BadIndexSet):
        schur_conditional_cov(np.eye(4), 3, 1, IntervalSet(1, 1))


def test_schur_wrap_interval():
    g = np.random.default_rng(3)
    joint = random_pd(g, 10)
    iv = IntervalSet.around(1, 4)  # {4, 5, 1}
    got = schur_conditional_cov(joint, 5, 2, iv)
    assert np.allclose(got, brute_schur(joint, 5, 2, [0, 3, 4]), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_schur_matches_brute_force_and_loewner(n, p, data):
    seed = data.draw(st.integers(0, 2**32 - 1))
    lo = data.draw(st.integers(1, n))
    hi = data.draw(st.integers(lo, n))
    joint = random_pd(np.random.default_rng(seed), n * p)
    cond, gain, comp = schur_conditional(joint, n, p, IntervalSet(lo, hi))
    oracle = brute_schur(joint, n, p, list(range(lo - 1, hi)))
    assert np.linalg.norm(cond - oracle) <= 1e-8 * max(1.0, np.linalg.norm(oracle))
    marginal = schur_conditional_cov(joint, n, p, IntervalSet(1, n)) if (lo, hi) == (1, n) else brute_schur(
        joint, n, p, list(range(lo - 1, hi))
    )
    s = np.zeros((p, n * p))
    for i in range(lo - 1, hi):
        s[:, i * p : (i + 1) * p] = np.eye(p)
    var_s = s @ joint @ s.T
    tol = 1e-9 * np.trace(var_s)
    assert np.linalg.eigvalsh(var_s - cond)[0] >= -tol
    assert min_eigenvalue(cond) <= min_eigenvalue(var_s) + tol
    assert gain.shape == (p, comp.size * p)
    assert np.allclose(marginal, oracle, atol=1e-8 * max(1.0, np.linalg.norm(oracle)))


def test_schur_singular_complement_uses_pseudo_inverse():
    # X1 = X2 and X3 = X4: {2,3} is determined by its complement, and the complement of {1,2} is singular
    joint = np.kron(np.eye(2), np.ones((2, 2)))
    assert schur_conditional_cov(joint, 4, 1, IntervalSet(2, 3))[0, 0] == pytest.approx(0.0, abs=1e-8)
    assert schur_conditional_cov(joint, 4, 1, IntervalSet(1, 2))[0, 0] == pytest.approx(4.0, abs=1e-8)
