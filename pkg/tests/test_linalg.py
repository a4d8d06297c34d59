import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entcbo.errors import DimensionError, InvalidInputError, NotPSDError, RankDeficientError, StructureError
from entcbo.linalg import (
    expm_i_hermitian,
    expm_skew_hermitian,
    first_r_columns,
    gram_schmidt,
    hermitian_eig,
    psd_sqrt,
    stiefel_residual,
)

from helpers import random_gue


def test_eig_identity_and_diagonal():
    w, v = hermitian_eig(np.eye(2))
    assert np.allclose(w, [1, 1])
    assert stiefel_residual(v) < 1e-12
    w, _ = hermitian_eig(np.diag([3.0, -1.0]))
    assert np.allclose(w, [-1, 3])


def test_eig_rejects_nonfinite():
    h = np.eye(3, dtype=complex)
    h[0, 1] = np.nan
    with pytest.raises(InvalidInputError):
        hermitian_eig(h)


def test_eig_reconstruction_many_samples(rng):
    for _ in range(1000):
        m = int(rng.integers(2, 19))
        h = random_gue(rng, m)
        w, v = hermitian_eig(h)
        assert np.all(np.diff(w) >= 0)
        rec = (v * w) @ v.conj().T
        assert np.linalg.norm(rec - h) <= 1e-10 * np.linalg.norm(h)
        assert np.linalg.norm(v.conj().T @ v - np.eye(m)) <= 1e-10


def test_expm_i_hermitian_small_cases():
    assert np.allclose(expm_i_hermitian(np.zeros((3, 3))), np.eye(3), atol=1e-15)
    r = expm_i_hermitian(np.diag([np.pi, 0.0]))
    assert np.allclose(r, np.diag([-1, 1]), atol=1e-15)


def test_expm_i_hermitian_unitary(rng):
    for m in (2, 5, 8, 18):
        u = expm_i_hermitian(random_gue(rng, m))
        assert np.linalg.norm(u.conj().T @ u - np.eye(m)) <= 1e-10


def test_expm_i_hermitian_columns_match_full(rng):
    h = random_gue(rng, 6)
    assert np.allclose(expm_i_hermitian(h, ncols=2), expm_i_hermitian(h)[:, :2], atol=1e-14)


def test_expm_skew_rotation():
    theta = 0.37
    a = np.array([[0, theta], [-theta, 0]], dtype=complex)
    rot = np.array([[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]])
    assert np.allclose(expm_skew_hermitian(a), rot, atol=1e-14)
    assert np.allclose(expm_skew_hermitian(np.zeros((4, 4))), np.eye(4), atol=1e-15)


def test_expm_skew_inverse_pair(rng):
    h = random_gue(rng, 6)
    a = 1j * h
    prod = expm_skew_hermitian(a) @ expm_skew_hermitian(-a)
    assert np.linalg.norm(prod - np.eye(6)) <= 1e-10


def test_expm_skew_rejects_non_skew(rng):
    with pytest.raises(StructureError):
        expm_skew_hermitian(random_gue(rng, 3))


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=50, deadline=None)
def test_expm_commuting_sum(seed, m):
    g = np.random.default_rng(seed)
    a = np.diag(1j * g.standard_normal(m))
    b = np.diag(1j * g.standard_normal(m))
    lhs = expm_skew_hermitian(a + b)
    rhs = expm_skew_hermitian(a) @ expm_skew_hermitian(b)
    assert np.linalg.norm(lhs - rhs) <= 1e-10


def test_psd_sqrt_cases(rng):
    assert np.allclose(psd_sqrt(np.eye(4)), np.eye(4))
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    r = a.conj().T @ a
    s = psd_sqrt(r)
    assert np.linalg.norm(s @ s - r) <= 1e-8


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -1e-3]))


def test_gram_schmidt_cases(rng):
    q = np.linalg.qr(rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3)))[0]
    assert np.allclose(gram_schmidt(q), q, atol=1e-12)
    assert np.allclose(gram_schmidt(np.array([[2.0], [0.0]])), [[1.0], [0.0]])
    u = gram_schmidt(rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3)))
    assert np.linalg.norm(u.conj().T @ u - np.eye(3)) <= 1e-12


def test_gram_schmidt_preserves_leading_spans(rng):
    a = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    q = gram_schmidt(a)
    for m in range(1, 4):
        proj = q[:, :m] @ q[:, :m].conj().T
        assert np.linalg.norm(proj @ a[:, :m] - a[:, :m]) < 1e-12


def test_gram_schmidt_rank_deficient():
    a = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankDeficientError):
        gram_schmidt(a)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 8))
@settings(max_examples=50, deadline=None)
def test_gram_schmidt_idempotent(seed, m, r):
    r = min(r, m)
    g = np.random.default_rng(seed)
    a = g.standard_normal((m, r)) + 1j * g.standard_normal((m, r))
    once = gram_schmidt(a)
    assert np.max(np.abs(gram_schmidt(once) - once)) <= 1e-12


def test_first_r_columns(rng):
    assert np.array_equal(first_r_columns(np.eye(3), 2), np.eye(3)[:, :2])
    q = expm_i_hermitian(random_gue(rng, 4))
    assert np.array_equal(first_r_columns(q, 4), q)
    u = first_r_columns(q, 2)
    assert stiefel_residual(u) <= 1e-12
    with pytest.raises(DimensionError):
        first_r_columns(np.eye(3), 4)
