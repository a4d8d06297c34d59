"""Benchmark states, closed-form EoF oracles and a simulated-annealing reference."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cbo_hermitian import gue_sample
from .cbo_unitary import skew_from_normals
from .errors import DimensionError, InvalidInputError
from .linalg import expm_i_hermitian, expm_skew_hermitian, psd_sqrt
from .quantum import objective_batch, validate_density

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)


class OracleKind(str, Enum):
    WOOTTERS = "wootters"
    ISOTROPIC = "isotropic_closed_form"
    SA = "sa_reference"


@dataclass(frozen=True)
class OracleValue:
    value: float
    kind: OracleKind


@dataclass(frozen=True)
class SaConfig:
    chi0: float = 0.3
    chi_end: float = 1e-4
    alpha: float = 2.0 / 3.0
    iter_per_angle: int = 1000
    realizations: int = 20

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if self.chi_end <= 0 or self.iter_per_angle < 0 or self.realizations < 1:
            raise InvalidInputError("invalid annealing schedule")


def _ket(dim, entries):
    v = np.zeros(dim, dtype=complex)
    for idx, amp in entries.items():
        v[idx] = amp
    return v


def _proj(v):
    return np.outer(v, v.conj())


def _open_unit(name, x):
    if not 0 < x < 1:
        raise InvalidInputError(f"{name}={x!r} must lie in (0, 1)")


def horodecki_2x2(q, a=0.75):
    """``q |Psi1><Psi1| + (1-q) |Psi2><Psi2|`` with
    ``Psi1 = a|00> + sqrt(1-a^2)|11>`` and ``Psi2 = a|10> + sqrt(1-a^2)|01>``."""
    _open_unit("q", q)
    _open_unit("a", a)
    c = np.sqrt(1.0 - a * a)
    psi1 = _ket(4, {0: a, 3: c})
    psi2 = _ket(4, {2: a, 1: c})
    return validate_density(q * _proj(psi1) + (1.0 - q) * _proj(psi2), 2, 2)


def bell_basis():
    """``(phi+, phi-, psi+, psi-)`` on two qubits."""
    return (
        _ket(4, {0: 1 / SQRT2, 3: 1 / SQRT2}),
        _ket(4, {0: 1 / SQRT2, 3: -1 / SQRT2}),
        _ket(4, {1: 1 / SQRT2, 2: 1 / SQRT2}),
        _ket(4, {1: 1 / SQRT2, 2: -1 / SQRT2}),
    )


def werner(F):
    if not 0.5 <= F < 1:
        raise InvalidInputError(f"F={F!r} must lie in [0.5, 1)")
    phi_p, phi_m, psi_p, psi_m = bell_basis()
    rest = _proj(psi_p) + _proj(phi_m) + _proj(phi_p)
    return validate_density(F * _proj(psi_m) + (1.0 - F) / 3.0 * rest, 2, 2)


def max_entangled_3x3():
    return _ket(9, {0: 1 / SQRT3, 4: 1 / SQRT3, 8: 1 / SQRT3})


def isotropic_3x3(F):
    _open_unit("F", F)
    p = _proj(max_entangled_3x3())
    return validate_density((1.0 - F) / 8.0 * (np.eye(9) - p) + F * p, 3, 3)


def horodecki_2x4(b):
    """Entangled PPT family on 2 x 4; separable at ``b = 0`` and ``b = 1``."""
    if not 0 <= b <= 1:
        raise InvalidInputError(f"b={b!r} must lie in [0, 1]")
    blk_a = b * np.eye(4)
    blk_b = b * np.eye(4, k=1)
    s = np.sqrt(1.0 - b * b) / 2.0
    blk_c = np.array([
        [(1 + b) / 2, 0, 0, s],
        [0, b, 0, 0],
        [0, 0, b, 0],
        [s, 0, 0, (1 + b) / 2],
    ])
    rho = np.block([[blk_a, blk_b], [blk_b.T, blk_c]]) / (1.0 + 7.0 * b)
    return validate_density(rho, 2, 4)


def binary_entropy(x):
    if not 0 <= x <= 1:
        raise InvalidInputError(f"x={x!r} must lie in [0, 1]")
    return float(sum(-p * np.log2(p) for p in (x, 1.0 - x) if p > 0))


SIGMA_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def concurrence(state):
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``."""
    if state.dims != (2, 2):
        raise DimensionError("concurrence is defined for two qubits only")
    rho = state.rho
    tilde = SIGMA_YY @ rho.conj() @ SIGMA_YY
    root = psd_sqrt(rho)
    inner = root @ tilde @ root
    inner = (inner + inner.conj().T) / 2
    lam = np.sort(np.linalg.eigvalsh(psd_sqrt(inner)))[::-1]
    return float(min(max(0.0, lam[0] - lam[1:].sum()), 1.0))


def eof_from_concurrence(c):
    return binary_entropy(0.5 + 0.5 * np.sqrt(max(0.0, 1.0 - c * c)))


def wootters_eof(state):
    return OracleValue(eof_from_concurrence(concurrence(state)), OracleKind.WOOTTERS)


def isotropic_gamma(F):
    return (np.sqrt(F) + np.sqrt(2.0 * (1.0 - F))) ** 2 / 3.0


def isotropic_eof(F):
    """Closed-form EoF of the 3 x 3 isotropic state."""
    _open_unit("F", F)
    if F <= 1.0 / 3.0:
        val = 0.0
    elif F <= 8.0 / 9.0:
        g = min(isotropic_gamma(F), 1.0)
        val = binary_entropy(g) + 1.0 - g
    else:
        val = 3.0 * (F - 1.0) + np.log2(3.0)
    return OracleValue(float(val), OracleKind.ISOTROPIC)


def simulated_annealing_reference(decomp, dims, M, sa=SaConfig(), rng=None):
    """Zero-temperature rejection search over Stiefel matrices.

    Every realization starts from the first ``r`` columns of ``exp(iH)``
    with ``H`` from the GUE and proposes ``exp(chi Z/||Z||_F) U`` with
    ``Z`` skew-Hermitian noise, keeping the proposal only if the objective
    drops.  ``chi`` shrinks by ``alpha`` after ``iter_per_angle`` proposals
    until it falls below ``chi_end``.  Realizations run as one batch, each
    on its own spawned stream.
    """
    if M < decomp.rank:
        raise DimensionError(f"M={M} is below the rank {decomp.rank}")
    rng = np.random.default_rng() if rng is None else rng
    streams = rng.spawn(sa.realizations)
    h = np.stack([gue_sample(M, g) for g in streams])
    u = expm_i_hermitian(h, ncols=decomp.rank)
    e = objective_batch(decomp, u, dims)
    chi = sa.chi0
    while chi >= sa.chi_end:
        for _ in range(sa.iter_per_angle):
            z = skew_from_normals(np.stack([g.standard_normal((M, M)) for g in streams]))
            z = z / np.linalg.norm(z, axis=(-2, -1), keepdims=True)
            prop = expm_skew_hermitian(chi * z) @ u
            e_new = objective_batch(decomp, prop, dims)
            better = e_new < e
            u[better] = prop[better]
            e[better] = e_new[better]
        chi *= sa.alpha
    return OracleValue(float(e.min()), OracleKind.SA)
