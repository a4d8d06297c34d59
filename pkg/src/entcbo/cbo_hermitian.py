"""Hermitian-preserving consensus-based optimization.

Each particle is an M x M Hermitian matrix ``H``; its candidate
decomposition matrix is the first ``r`` columns of ``exp(iH)``.  The
update is Euler-Maruyama with anisotropic (entrywise) noise whose matrix
is itself Hermitian, so every iterate is Hermitian exactly, not just up to
rounding.  A projection baseline (unstructured noise followed by
symmetrization) is provided for comparison.
"""

import numpy as np

from .ensemble import RunTrace, draw_normals, particle_streams
from .errors import DimensionError, InvalidInputError
from .linalg import dagger, expm_i_hermitian, hermitian_residual
from .quantum import objective_batch


def gue_from_normals(re, im):
    a = re + 1j * im
    return (a + dagger(a)) / 2


def gue_sample(M, rng):
    """Draw from the Gaussian unitary ensemble, ``(A + A^H)/2``."""
    return gue_from_normals(rng.standard_normal((M, M)), rng.standard_normal((M, M)))


def hermitian_from_normals(y):
    """Build the Hermitian noise matrix from a real normal array ``(..., M, M)``.

    Diagonal entries are ``Y_mm``; above the diagonal ``Y_pq + i Y_qp``;
    below it the complex conjugate.
    """
    upper = np.triu(y, 1) + 1j * np.triu(np.swapaxes(y, -1, -2), 1)
    diag = np.diagonal(y, axis1=-2, axis2=-1)
    return upper + dagger(upper) + diag[..., None] * np.eye(y.shape[-1])


def hermitian_noise(M, rng):
    return hermitian_from_normals(rng.standard_normal((M, M)))


def gibbs_weights(energies, beta):
    """Normalized ``exp(-beta e_j)``, shifted by the minimum energy to avoid underflow."""
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise InvalidInputError("empty ensemble")
    if not np.all(np.isfinite(e)):
        raise InvalidInputError("non-finite energy in ensemble")
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def weighted_mean(particles, weights):
    # elementwise product and axis-0 sum keep conjugate pairs conjugate bit for bit
    return np.sum(weights[:, None, None] * particles, axis=0)


def gibbs_consensus(particles, energies, beta):
    """Gibbs-weighted average of the particle stack ``(J, M, M)``."""
    particles = np.asarray(particles)
    if particles.shape[0] == 0:
        raise InvalidInputError("empty ensemble")
    w = gibbs_weights(energies, beta)
    if w.shape[0] != particles.shape[0]:
        raise DimensionError("one energy per particle required")
    return weighted_mean(particles, w)


def hermitian_step(particles, consensus, config, rngs):
    """One Euler-Maruyama update of the whole ensemble.

    ``rngs`` is either one generator per particle or a single generator
    shared by all.
    """
    particles = np.asarray(particles)
    J, M = particles.shape[0], particles.shape[-1]
    y = _draw(rngs, J, (2, M, M))
    z = hermitian_from_normals(y[:, 0])
    z_add = hermitian_from_normals(y[:, 1])
    return _euler(particles, consensus, config, z, z_add)


def _draw(rngs, J, shape):
    if isinstance(rngs, np.random.Generator):
        return rngs.standard_normal((J,) + shape)
    return draw_normals(rngs, shape)


def _euler(h, h_bar, config, z, z_add):
    diff = h - h_bar
    sq = np.sqrt(config.dt)
    out = h - (config.lam * config.dt) * diff
    if config.sigma:
        out = out + (config.sigma * sq) * (diff * z)
    if config.additive_sigma:
        out = out + (config.additive_sigma * sq) * z_add
    return out


def projection_step(particles, consensus, config, rngs):
    """Euler-Maruyama with unstructured real noise, then ``(H + H^H)/2``."""
    particles = np.asarray(particles)
    J, M = particles.shape[0], particles.shape[-1]
    y = _draw(rngs, J, (2, M, M))
    half = _euler(particles, consensus, config, y[:, 0], y[:, 1])
    return (half + dagger(half)) / 2


def initial_hermitian(config, M, J):
    """GUE initial ensemble and the per-particle streams that continue from it."""
    streams = particle_streams(config.seed, M, J)
    h = np.stack([gue_sample(M, g) for g in streams])
    return h, streams


def ensemble_energies(decomp, h, dims=None):
    u = expm_i_hermitian(h, ncols=decomp.rank)
    return objective_batch(decomp, u, dims), u


def _check_dims(decomp, M, J):
    if M < decomp.rank:
        raise DimensionError(f"M={M} is below the rank {decomp.rank}")
    if J < 1:
        raise InvalidInputError("need at least one particle")


def run_hermitian(decomp, dims, M, J, config, projection=False):
    """Minimize ``E_AB`` over ``M x M`` Hermitian particles.

    Returns a :class:`RunTrace` whose ``best_value`` is the smallest
    consensus objective over iterations ``1..K``.
    """
    _check_dims(decomp, M, J)
    step = projection_step if projection else hermitian_step
    h, streams = initial_hermitian(config, M, J)
    energies, _ = ensemble_energies(decomp, h, dims)
    h_bar = gibbs_consensus(h, energies, config.beta)
    cons_val, u_bar = ensemble_energies(decomp, h_bar[None], dims)
    trace = RunTrace(
        "hermitian_projection" if projection else "hermitian",
        M, decomp.rank, float(cons_val[0]),
    )
    initial = u_bar[0]
    resid = hermitian_residual(h)
    for k in range(1, config.max_iter + 1):
        h = step(h, h_bar, config, streams)
        resid = max(resid, hermitian_residual(h))
        energies, _ = ensemble_energies(decomp, h, dims)
        h_bar = gibbs_consensus(h, energies, config.beta)
        cons_val, u_bar = ensemble_energies(decomp, h_bar[None], dims)
        trace.record(k, cons_val[0], energies, u_bar[0])
    trace.max_structure_residual = resid
    return trace.finish(initial)


def run_hermitian_projection(decomp, dims, M, J, config):
    return run_hermitian(decomp, dims, M, J, config, projection=True)
