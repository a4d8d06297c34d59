"""Unitary-preserving consensus-based optimization on the Stiefel manifold.

Particles are M x r matrices with orthonormal columns.  The update is the
exponential integrator ``U <- exp(A) U`` where ``A`` collects the drift
``lam dt (Ubar U^H - U Ubar^H)`` and skew-Hermitian noise; ``exp(A)`` is
unitary, so orthonormality holds without any re-orthonormalization.
"""

import numpy as np

from .cbo_hermitian import (
    _check_dims,
    _draw,
    ensemble_energies,
    gibbs_weights,
    initial_hermitian,
)
from .ensemble import RunTrace
from .errors import InvalidInputError, RankDeficientError
from .linalg import dagger, expm_skew_hermitian, gram_schmidt_batch, stiefel_residual
from .quantum import objective_batch

MAX_RESAMPLE = 10


def skew_from_normals(y):
    """Skew-Hermitian noise from a real normal array ``(..., M, M)``.

    Diagonal ``i Y_mm``; above the diagonal ``Y_pq + i Y_qp``; below it
    ``-Y_pq + i Y_qp``, i.e. minus the conjugate.
    """
    upper = np.triu(y, 1) + 1j * np.triu(np.swapaxes(y, -1, -2), 1)
    diag = np.diagonal(y, axis1=-2, axis2=-1)
    return upper - dagger(upper) + 1j * diag[..., None] * np.eye(y.shape[-1])


def skew_noise(M, rng):
    return skew_from_normals(rng.standard_normal((M, M)))


def argmin_consensus(particles, energies):
    """Lowest-energy particle; ties go to the lowest index."""
    e = np.asarray(energies, dtype=float)
    if len(particles) == 0 or e.size == 0:
        raise InvalidInputError("empty ensemble")
    if not np.all(np.isfinite(e)):
        raise InvalidInputError("non-finite energy in ensemble")
    return np.asarray(particles[int(np.argmin(e))])


def drift_generator(u, u_bar, lam, dt):
    x = u_bar @ dagger(u)
    return (lam * dt) * (x - dagger(x))


def unitary_step(particles, consensus, config, rngs):
    particles = np.asarray(particles)
    J, M = particles.shape[0], particles.shape[-2]
    a = drift_generator(particles, consensus, config.lam, config.dt)
    if config.sigma or config.additive_sigma:
        y = _draw(rngs, J, (2, M, M))
        sq = np.sqrt(config.dt)
        if config.sigma:
            a = a + (config.sigma * sq) * skew_from_normals(y[:, 0])
        if config.additive_sigma:
            a = a + (config.additive_sigma * sq) * skew_from_normals(y[:, 1])
    return expm_skew_hermitian(a) @ particles


def drift_consensus_check(u0, u_bar, lam=1.0, dt=0.2, steps=500):
    """Distances ``||U^k - Ubar||_F`` under the noise-free integrator.

    The first entry is the starting distance, so the list has ``steps + 1``
    values.
    """
    u = np.asarray(u0, dtype=complex)
    u_bar = np.asarray(u_bar, dtype=complex)
    dist = [float(np.linalg.norm(u - u_bar))]
    for _ in range(steps):
        u = expm_skew_hermitian(drift_generator(u, u_bar, lam, dt)) @ u
        dist.append(float(np.linalg.norm(u - u_bar)))
    return dist


def initial_stiefel(decomp, config, M, J):
    h, streams = initial_hermitian(config, M, J)
    _, u = ensemble_energies(decomp, h)
    return u, streams


def run_unitary(decomp, dims, M, J, config):
    """Argmin-consensus CBO with the exponential integrator."""
    _check_dims(decomp, M, J)
    u, streams = initial_stiefel(decomp, config, M, J)
    energies = objective_batch(decomp, u, dims)
    u_bar = argmin_consensus(u, energies)
    trace = RunTrace("unitary", M, decomp.rank, float(energies.min()))
    initial = u_bar
    resid = stiefel_residual(u)
    for k in range(1, config.max_iter + 1):
        u = unitary_step(u, u_bar, config, streams)
        resid = max(resid, stiefel_residual(u))
        energies = objective_batch(decomp, u, dims)
        u_bar = argmin_consensus(u, energies)
        trace.record(k, energies.min(), energies, u_bar)
    trace.max_structure_residual = resid
    return trace.finish(initial)


def _orthonormalize(u):
    q, ok = gram_schmidt_batch(u)
    if not np.all(ok):
        raise RankDeficientError("consensus columns are numerically dependent")
    return q


def projection_consensus(particles, energies, beta):
    w = gibbs_weights(energies, beta)
    return _orthonormalize(np.sum(w[:, None, None] * particles, axis=0))


def projection_step(particles, consensus, config, rngs):
    """Ambient Euler-Maruyama step followed by Gram-Schmidt.

    A particle whose half-step is rank deficient redraws its noise, up to
    ``MAX_RESAMPLE`` times.
    """
    particles = np.asarray(particles)
    J, M, r = particles.shape
    streams = rngs if not isinstance(rngs, np.random.Generator) else None
    y = _draw(rngs, J, (2, M, r))
    out = _projected(particles, consensus, config, y)
    q, ok = gram_schmidt_batch(out)
    for _ in range(MAX_RESAMPLE):
        if np.all(ok):
            return q
        bad = np.flatnonzero(~ok)
        sub = [streams[j] for j in bad] if streams is not None else rngs
        y = _draw(sub, len(bad), (2, M, r))
        q[bad], ok[bad] = gram_schmidt_batch(_projected(particles[bad], consensus, config, y))
    if not np.all(ok):
        raise RankDeficientError("Gram-Schmidt failed after resampling the noise")
    return q


def _projected(u, u_bar, config, y):
    diff = u - u_bar
    sq = np.sqrt(config.dt)
    out = u - (config.lam * config.dt) * diff
    if config.sigma:
        out = out + (config.sigma * sq) * (diff * y[:, 0])
    if config.additive_sigma:
        out = out + (config.additive_sigma * sq) * y[:, 1]
    return out


def run_unitary_projection(decomp, dims, M, J, config):
    """Gibbs-consensus CBO in the ambient space with Gram-Schmidt projection."""
    _check_dims(decomp, M, J)
    u, streams = initial_stiefel(decomp, config, M, J)
    energies = objective_batch(decomp, u, dims)
    u_bar = projection_consensus(u, energies, config.beta)
    trace = RunTrace("unitary_projection", M, decomp.rank,
                     float(objective_batch(decomp, u_bar, dims)))
    initial = u_bar
    resid = stiefel_residual(u)
    for k in range(1, config.max_iter + 1):
        u = projection_step(u, u_bar, config, streams)
        resid = max(resid, stiefel_residual(u))
        energies = objective_batch(decomp, u, dims)
        u_bar = projection_consensus(u, energies, config.beta)
        trace.record(k, objective_batch(decomp, u_bar, dims), energies, u_bar)
    trace.max_structure_residual = resid
    return trace.finish(initial)
