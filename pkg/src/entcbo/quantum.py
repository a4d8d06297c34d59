"""Density matrices and the entanglement objective ``E_AB(U)``.

A Stiefel matrix ``U`` (M x r) parameterizes the pure-state decomposition
``W = Psi P^{1/2} U^H`` of a density matrix.  Each column ``w_m`` of ``W``
is a branch with weight ``sigma_m = <w_m|w_m>``; the objective is the
weighted average of the branches' entanglement entropies, in bits.

Composite index convention: component ``(a, b)`` of a vector on
``C^{N_A} (x) C^{N_B}`` lives at flat index ``a * N_B + b``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    InvalidInputError,
    NegativeEigenvalueError,
    NotHermitianError,
    NotPSDError,
    TraceError,
)
from .linalg import dagger, hermitian_eig

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
RANK_TOL = 1e-10
WEIGHT_TOL = 1e-12
CLIP_TOL = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    dim_a: int
    dim_b: int
    rho: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return self.dim_a * self.dim_b

    @property
    def dims(self):
        return (self.dim_a, self.dim_b)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Nonzero part of the eigendecomposition of a density matrix.

    ``probabilities`` are sorted descending; ``scaled_frame`` caches
    ``Psi diag(P)^{1/2}`` since it is the only thing the objective needs.
    """

    rank: int
    probabilities: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    scaled_frame: np.ndarray = field(repr=False)
    dim_a: int = 0
    dim_b: int = 0

    @property
    def dims(self):
        return (self.dim_a, self.dim_b)


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    per_branch: list  # (weight, entropy) for every retained branch


def validate_density(rho, dim_a, dim_b):
    """Check the density-matrix invariants and wrap ``rho``.

    Raises a distinct :class:`~entcbo.errors.DensityValidationError`
    subclass for each violated invariant.
    """
    rho = np.array(rho, dtype=complex)
    n = dim_a * dim_b
    if dim_a < 1 or dim_b < 1:
        raise DimensionError("subsystem dimensions must be positive")
    if rho.shape != (n, n):
        raise DimensionError(f"expected a {n}x{n} matrix for dims ({dim_a}, {dim_b}), got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidInputError("density matrix has non-finite entries")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > HERMITIAN_TOL:
        raise NotHermitianError(f"density matrix is not Hermitian (residual {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceError(f"trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -PSD_TOL:
        raise NegativeEigenvalueError(f"eigenvalue {lam_min:.3e} is negative")
    rho.setflags(write=False)
    return DensityMatrix(dim_a, dim_b, rho)


def spectral_decompose(state, rank_tol=RANK_TOL):
    w, v = hermitian_eig(state.rho)
    order = np.argsort(w)[::-1]
    keep = order[w[order] > rank_tol]
    p = w[keep]
    psi = v[:, keep]
    frame = psi * np.sqrt(p)[None, :]
    for a in (p, psi, frame):
        a.setflags(write=False)
    return SpectralDecomposition(len(keep), p, psi, frame, state.dim_a, state.dim_b)


def build_w(decomp, u):
    """``W = Psi P^{1/2} U^H``; works on a stack of ``U``."""
    u = np.asarray(u)
    if u.shape[-1] != decomp.rank:
        raise DimensionError(f"U has {u.shape[-1]} columns, decomposition rank is {decomp.rank}")
    return decomp.scaled_frame @ dagger(u)


def branch_decomposition(w, weight_tol=WEIGHT_TOL):
    """Split ``W`` into ``(sigma_m, phi_m)`` pairs, dropping vanishing columns."""
    w = np.asarray(w)
    out = []
    for col in w.T:
        sigma = float(np.vdot(col, col).real)
        if sigma > weight_tol:
            out.append((sigma, col / np.sqrt(sigma)))
    return out


def partial_trace_b(phi, dim_a, dim_b):
    """Reduced state ``Tr_B |phi><phi|`` on subsystem A."""
    phi = np.asarray(phi)
    if phi.shape != (dim_a * dim_b,):
        raise DimensionError(f"vector of length {phi.shape} does not match dims ({dim_a}, {dim_b})")
    nrm = np.linalg.norm(phi)
    if abs(nrm - 1.0) > 1e-10:
        raise InvalidInputError(f"state vector has norm {nrm!r}")
    mat = phi.reshape(dim_a, dim_b)
    return mat @ mat.conj().T


def von_neumann_entropy(rho_a, clip_tol=CLIP_TOL):
    """Entropy ``-sum lambda log2 lambda`` in bits; ``0 log 0 = 0``."""
    lam = np.linalg.eigvalsh(rho_a)
    if lam[0] < -PSD_TOL:
        raise NotPSDError(f"reduced state has eigenvalue {lam[0]:.3e}")
    if abs(lam.sum() - 1.0) > 1e-8:
        raise InvalidInputError(f"reduced state has trace {lam.sum()!r}")
    lam = lam[lam > clip_tol]
    return float(max(-np.sum(lam * np.log2(lam)), 0.0))


def entanglement_objective(decomp, u, dims=None):
    """Reference evaluation of ``E_AB(U)`` branch by branch."""
    dim_a, dim_b = dims if dims is not None else decomp.dims
    w = build_w(decomp, u)
    branches = []
    for sigma, phi in branch_decomposition(w):
        rho_a = partial_trace_b(phi, dim_a, dim_b)
        branches.append((sigma, von_neumann_entropy(rho_a)))
    value = float(sum(s * e for s, e in branches))
    return ObjectiveValue(value, branches)


def _entropy_bits(lam):
    lam = np.where(lam > CLIP_TOL, lam, 1.0)
    return -np.sum(lam * np.log2(lam), axis=-1)


def objective_batch(decomp, u, dims=None):
    """Vectorized ``E_AB`` over a stack ``u`` of shape ``(..., M, r)``.

    Same result as :func:`entanglement_objective` up to rounding; used
    inside the solvers where thousands of evaluations per iteration occur.
    The entropy is taken on the smaller subsystem, which is equal for a
    pure branch.
    """
    dim_a, dim_b = dims if dims is not None else decomp.dims
    w = build_w(decomp, u)                      # (..., N, M)
    sigma = np.sum(w.real**2 + w.imag**2, axis=-2)  # (..., M)
    cols = np.swapaxes(w, -1, -2).reshape(w.shape[:-2] + (w.shape[-1], dim_a, dim_b))
    if dim_b < dim_a:
        cols = np.swapaxes(cols, -1, -2)
    red = cols @ dagger(cols)                   # unnormalized reduced states
    keep = sigma > WEIGHT_TOL
    safe = np.where(keep, sigma, 1.0)
    red = red / safe[..., None, None]
    if red.shape[-1] == 1:
        ent = np.zeros(sigma.shape)
    elif red.shape[-1] == 2:
        a = red[..., 0, 0].real
        d = red[..., 1, 1].real
        b = red[..., 0, 1]
        det = np.clip(a * d - (b.real**2 + b.imag**2), 0.0, 0.25)
        disc = np.sqrt(np.clip(1.0 - 4.0 * det, 0.0, None))
        big = 0.5 * (1.0 + disc)
        small = 2.0 * det / (1.0 + disc)
        ent = _entropy_bits(np.stack([small, big], axis=-1))
    else:
        ent = _entropy_bits(np.linalg.eigvalsh(red))
    ent = np.where(keep, np.maximum(ent, 0.0), 0.0)
    return np.sum(sigma * ent, axis=-1)
