"""Multi-species Hermitian CBO: ensembles at several sizes M share one consensus.

Particles of a different size are brought to the target size before
averaging.  Smaller ones are zero-padded, which leaves the objective
unchanged; larger ones keep the principal submatrix on their largest
columns.
"""

import numpy as np

from .cbo_hermitian import (
    _check_dims,
    ensemble_energies,
    gibbs_consensus,
    hermitian_step,
    initial_hermitian,
)
from .ensemble import RunTrace
from .errors import DimensionError, InvalidInputError
from .linalg import hermitian_residual


def embed(h, m2):
    """Zero-pad ``h`` (or a stack of them) to ``m2 x m2``."""
    h = np.asarray(h)
    m1 = h.shape[-1]
    if m2 < m1:
        raise DimensionError(f"cannot embed {m1}x{m1} into {m2}x{m2}")
    out = np.zeros(h.shape[:-2] + (m2, m2), dtype=h.dtype)
    out[..., :m1, :m1] = h
    return out


def truncation_indices(h, m1):
    """Indices of the ``m1`` largest-norm columns, ascending.

    Equal norms keep the lower index.
    """
    h = np.asarray(h)
    norms = np.linalg.norm(h, axis=-2)
    # stable sort on -norm keeps lower indices first among ties
    order = np.argsort(-norms, axis=-1, kind="stable")[..., :m1]
    return np.sort(order, axis=-1)


def truncate(h, m1):
    """Principal submatrix of ``h`` on its ``m1`` largest-norm columns."""
    h = np.asarray(h)
    m2 = h.shape[-1]
    if m1 > m2:
        raise DimensionError(f"cannot truncate {m2}x{m2} to {m1}x{m1}")
    if m1 == m2:
        return h.copy()
    idx = truncation_indices(h, m1)
    rows = np.take_along_axis(h, idx[..., :, None], axis=-2)
    return np.take_along_axis(rows, idx[..., None, :], axis=-1)


def resize(h, m):
    return embed(h, m) if h.shape[-1] <= m else truncate(h, m)


def resized_energies(decomp, levels, target, own_energies=None, dims=None):
    """Objective of every level's particles after resizing to ``target``.

    Zero-padding leaves the objective unchanged, so for levels at or below
    the target the ensemble's own energies are reused when supplied.
    """
    out = {}
    for m, h in levels.items():
        if m <= target and own_energies is not None:
            out[m] = own_energies[m]
        else:
            out[m], _ = ensemble_energies(decomp, resize(h, target), dims)
    return out


def cross_consensus(levels, energies, beta, target):
    """Gibbs average over all levels' particles resized to ``target``.

    ``energies[m]`` must be the objective of the resized particles.  The
    weights share one minimum shift across all levels.
    """
    if not levels:
        raise InvalidInputError("no species to average")
    keys = sorted(levels)
    stack = np.concatenate([resize(levels[m], target) for m in keys])
    e = np.concatenate([np.asarray(energies[m], dtype=float) for m in keys])
    return gibbs_consensus(stack, e, beta)


def run_multispecies(decomp, dims, level_set, J, config):
    """Coupled Hermitian CBO over ``level_set``; returns ``{M: RunTrace}``.

    Each level keeps its own particles, streams and update rule; only the
    consensus is shared.  With a single level this is exactly
    :func:`~entcbo.cbo_hermitian.run_hermitian`.
    """
    level_set = sorted(set(int(m) for m in level_set))
    if not level_set:
        raise InvalidInputError("empty level set")
    for m in level_set:
        _check_dims(decomp, m, J)
    particles, streams = {}, {}
    for m in level_set:
        particles[m], streams[m] = initial_hermitian(config, m, J)

    def consensus_round():
        own = {m: ensemble_energies(decomp, particles[m], dims)[0] for m in level_set}
        bars, vals, points = {}, {}, {}
        for target in level_set:
            e = resized_energies(decomp, particles, target, own, dims)
            bars[target] = cross_consensus(particles, e, config.beta, target)
            v, u = ensemble_energies(decomp, bars[target][None], dims)
            vals[target], points[target] = float(v[0]), u[0]
        return own, bars, vals, points

    own, bars, vals, points = consensus_round()
    traces = {m: RunTrace("multispecies", m, decomp.rank, vals[m]) for m in level_set}
    initial = dict(points)
    resid = {m: hermitian_residual(particles[m]) for m in level_set}
    for k in range(1, config.max_iter + 1):
        for m in level_set:
            particles[m] = hermitian_step(particles[m], bars[m], config, streams[m])
            resid[m] = max(resid[m], hermitian_residual(particles[m]))
        own, bars, vals, points = consensus_round()
        for m in level_set:
            traces[m].record(k, vals[m], own[m], points[m])
    for m in level_set:
        traces[m].max_structure_residual = resid[m]
        traces[m].finish(initial[m])
    return traces
