"""Dense complex matrix kernels.

Every exponential in the package goes through the spectral route
``V diag(f(lambda)) V^H`` of a Hermitian eigendecomposition; inputs are
always (skew-)Hermitian, so this keeps unitarity constructive.  All
functions accept a stack of matrices in the leading axes.
"""

import numpy as np

from .errors import (
    DimensionError,
    InvalidInputError,
    NotPSDError,
    RankDeficientError,
    StructureError,
)

# structural residual, strict identity checks, PSD slack
STRUCT_TOL = 1e-10
STRICT_TOL = 1e-12
PSD_TOL = 1e-10
RANK_TOL = 1e-10


def dagger(a):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")


def _check_square(a):
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}")


def hermitian_residual(h):
    """Largest entry of ``|H - H^H|`` over the whole stack."""
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - dagger(h))))


def stiefel_residual(u):
    """Largest ``||U^H U - I_r||_F`` over the stack."""
    u = np.asarray(u)
    r = u.shape[-1]
    gram = dagger(u) @ u
    res = np.linalg.norm(gram - np.eye(r), axis=(-2, -1))
    return float(np.max(res)) if res.size else 0.0


def hermitian_eig(h):
    """Eigendecomposition of a Hermitian matrix (or stack).

    Returns
    -------
    eigenvalues : ndarray, real, ascending along the last axis
    eigenvectors : ndarray, unitary, columns are eigenvectors
    """
    h = np.asarray(h)
    _check_square(h)
    _check_finite(h)
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError(f"eigensolver failed: {exc}") from exc


def apply_spectral(h, func):
    """Return ``V diag(func(lambda)) V^H`` for Hermitian ``h``."""
    w, v = hermitian_eig(h)
    return (v * func(w)[..., None, :]) @ dagger(v)


def expm_i_hermitian(h, ncols=None):
    """Unitary ``exp(iH)`` for Hermitian ``H``.

    With ``ncols`` only the first ``ncols`` columns are formed, which is
    all the solvers ever need.
    """
    w, v = hermitian_eig(h)
    right = dagger(v)
    if ncols is not None:
        if ncols > h.shape[-1]:
            raise DimensionError(f"ncols={ncols} exceeds dimension {h.shape[-1]}")
        right = right[..., :ncols]
    return (v * np.exp(1j * w)[..., None, :]) @ right


def expm_skew_hermitian(a, tol=STRICT_TOL):
    """``exp(A)`` for skew-Hermitian ``A``, via ``exp(i(-iA))``."""
    a = np.asarray(a, dtype=complex)
    _check_square(a)
    _check_finite(a)
    res = float(np.max(np.abs(a + dagger(a)))) if a.size else 0.0
    if res > tol:
        raise StructureError(f"matrix is not skew-Hermitian (residual {res:.3e})")
    return expm_i_hermitian(-1j * a)


def psd_sqrt(r, positivity_tol=PSD_TOL):
    """Principal square root of a positive-semidefinite Hermitian matrix."""
    w, v = hermitian_eig(r)
    if np.any(w < -positivity_tol):
        raise NotPSDError(f"smallest eigenvalue {w.min():.3e} below -{positivity_tol:g}")
    s = np.sqrt(np.clip(w, 0.0, None))
    return (v * s[..., None, :]) @ dagger(v)


def gram_schmidt_batch(u, rank_tol=RANK_TOL):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Works on a stack ``(..., M, r)``.  Returns the orthonormalized stack and
    a boolean mask (leading shape) marking the members whose columns were
    numerically independent; failed members hold garbage.
    """
    q = np.array(u, dtype=complex, copy=True)
    r = q.shape[-1]
    ok = np.ones(q.shape[:-2], dtype=bool)
    for m in range(r):
        v = q[..., :, m]
        for _ in range(2):
            for p in range(m):
                qp = q[..., :, p]
                coef = np.sum(np.conj(qp) * v, axis=-1, keepdims=True)
                v = v - coef * qp
        nrm = np.linalg.norm(v, axis=-1)
        ok &= nrm > rank_tol
        safe = np.where(nrm > rank_tol, nrm, 1.0)
        q[..., :, m] = v / safe[..., None]
    return q, ok


def gram_schmidt(u, rank_tol=RANK_TOL):
    """Orthonormalize the columns of ``u`` in order; see :func:`gram_schmidt_batch`."""
    u = np.asarray(u)
    if u.ndim < 2 or u.shape[-1] > u.shape[-2]:
        raise DimensionError(f"need an M x r matrix with r <= M, got {u.shape}")
    _check_finite(u)
    q, ok = gram_schmidt_batch(u, rank_tol)
    if not np.all(ok):
        raise RankDeficientError("columns are numerically dependent")
    return q


def first_r_columns(q, r):
    q = np.asarray(q)
    _check_square(q)
    if r > q.shape[-1] or r < 1:
        raise DimensionError(f"cannot take {r} columns of a {q.shape[-2]}x{q.shape[-1]} matrix")
    if stiefel_residual(q) > STRUCT_TOL:
        raise StructureError("input is not unitary")
    return q[..., :, :r].copy()
