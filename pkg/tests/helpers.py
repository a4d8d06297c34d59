"""Independent reference routines shared by the tests."""

import numpy as np


def random_gue(rng, m):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (a + a.conj().T) / 2


def random_stiefel(rng, m, r):
    a = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    q, _ = np.linalg.qr(a)
    return q


def random_density(rng, dim_a, dim_b, rank=None):
    n = dim_a * dim_b
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def schmidt_entropy(phi, dim_a, dim_b):
    """Entanglement entropy from singular values; independent of partial traces."""
    s = np.linalg.svd(np.asarray(phi).reshape(dim_a, dim_b), compute_uv=False)
    p = s**2 / np.sum(s**2)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log2(p)))


def brute_objective(rho_vectors, probs, u, dim_a, dim_b):
    """E_AB straight from the definition, column by column."""
    w = rho_vectors @ np.diag(np.sqrt(probs)) @ u.conj().T
    total = 0.0
    for col in w.T:
        sigma = np.vdot(col, col).real
        if sigma > 1e-14:
            total += sigma * schmidt_entropy(col / np.sqrt(sigma), dim_a, dim_b)
    return total
