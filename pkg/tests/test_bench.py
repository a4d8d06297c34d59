import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entcbo import bench
from entcbo.errors import DimensionError, InvalidInputError
from entcbo.cbo_hermitian import gue_sample
from entcbo.linalg import expm_i_hermitian
from entcbo.quantum import entanglement_objective, spectral_decompose, validate_density

from helpers import random_density, random_stiefel

WERNER_07 = 0.2502249116


def _concurrence_via_product(rho):
    # independent route: square roots of the eigenvalues of rho * rho~
    tilde = bench.SIGMA_YY @ rho.conj() @ bench.SIGMA_YY
    ev = np.sort(np.sqrt(np.abs(np.linalg.eigvals(rho @ tilde).real)))[::-1]
    return max(0.0, ev[0] - ev[1:].sum())


def _local_unitary(g):
    out = []
    for _ in range(2):
        q, r = np.linalg.qr(g.standard_normal((2, 2)) + 1j * g.standard_normal((2, 2)))
        out.append(q * (np.diag(r) / np.abs(np.diag(r))))
    return np.kron(*out)


def test_state_constructors_validate():
    for state in (bench.horodecki_2x2(0.3), bench.werner(0.5), bench.isotropic_3x3(0.5),
                  bench.horodecki_2x4(0.0), bench.horodecki_2x4(1.0)):
        assert abs(np.trace(state.rho).real - 1) <= 1e-12
    for bad in (lambda: bench.werner(1.0), lambda: bench.werner(0.4),
                lambda: bench.isotropic_3x3(0.0), lambda: bench.horodecki_2x2(1.0),
                lambda: bench.horodecki_2x4(1.5)):
        with pytest.raises(InvalidInputError):
            bad()


def test_bell_basis_orthonormal():
    b = np.array(bench.bell_basis())
    assert np.allclose(b.conj() @ b.T, np.eye(4), atol=1e-15)


def test_binary_entropy():
    assert bench.binary_entropy(0.0) == 0.0
    assert bench.binary_entropy(1.0) == 0.0
    assert bench.binary_entropy(0.5) == 1.0
    assert bench.binary_entropy(0.1) == pytest.approx(0.4689955936, abs=1e-10)


def test_werner_oracle_value():
    assert bench.wootters_eof(bench.werner(0.7)).value == pytest.approx(WERNER_07, abs=1e-9)
    assert bench.wootters_eof(bench.werner(0.5)).value == 0.0
    # Werner concurrence is 2F - 1
    assert bench.concurrence(bench.werner(0.8)) == pytest.approx(0.6, abs=1e-10)


def test_concurrence_matches_product_route(rng):
    for _ in range(200):
        state = validate_density(random_density(rng, 2, 2), 2, 2)
        assert bench.concurrence(state) == pytest.approx(_concurrence_via_product(state.rho), abs=1e-7)


def test_concurrence_requires_two_qubits():
    with pytest.raises(DimensionError):
        bench.concurrence(bench.isotropic_3x3(0.5))


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
@settings(max_examples=50, deadline=None)
def test_wootters_local_unitary_invariance(seed, q):
    g = np.random.default_rng(seed)
    state = bench.horodecki_2x2(q)
    v = _local_unitary(g)
    rotated = validate_density(v @ state.rho @ v.conj().T, 2, 2)
    # rank-2 input: sqrt of ~1e-16 eigenvalue noise limits agreement to ~1e-8
    assert bench.wootters_eof(rotated).value == pytest.approx(bench.wootters_eof(state).value, abs=1e-7)


def test_werner_eof_monotone():
    vals = [bench.wootters_eof(bench.werner(F)).value for F in np.linspace(0.5, 0.99, 50)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_isotropic_closed_form():
    assert bench.isotropic_eof(0.2).value == 0.0
    assert bench.isotropic_gamma(8 / 9) == pytest.approx(2 / 3, abs=1e-14)
    assert bench.isotropic_eof(0.999999).value == pytest.approx(np.log2(3), abs=1e-5)
    grid = np.linspace(1e-6, 1 - 1e-6, 1000)
    vals = np.array([bench.isotropic_eof(F).value for F in grid])
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.max(np.abs(np.diff(vals))) <= 0.02
    for F in (1 / 3, 8 / 9):
        lo, hi = bench.isotropic_eof(F - 1e-9).value, bench.isotropic_eof(F + 1e-9).value
        assert abs(hi - lo) <= 1e-6


def test_sa_degenerate_schedule_returns_initial_minimum():
    d = spectral_decompose(bench.werner(0.7))
    sa = bench.SaConfig(chi0=1e-5, chi_end=1e-4, realizations=3)
    g = np.random.default_rng(0)
    val = bench.simulated_annealing_reference(d, (2, 2), 4, sa, g)
    assert val.kind == bench.OracleKind.SA
    # same start matrices reproduced from the same spawned streams
    streams = np.random.default_rng(0).spawn(3)
    u = expm_i_hermitian(np.stack([gue_sample(4, s) for s in streams]), ncols=d.rank)
    ref = min(entanglement_objective(d, x).value for x in u)
    assert val.value == pytest.approx(ref, abs=1e-12)


def test_sa_reference_is_an_upper_bound():
    d = spectral_decompose(bench.werner(0.7))
    sa = bench.SaConfig(iter_per_angle=100, realizations=4)
    val = bench.simulated_annealing_reference(d, (2, 2), 4, sa, np.random.default_rng(1))
    assert val.value >= WERNER_07 - 2e-3
    assert val.value <= WERNER_07 + 0.02


def test_sa_config_validation():
    with pytest.raises(InvalidInputError):
        bench.SaConfig(alpha=1.0)
    with pytest.raises(InvalidInputError):
        bench.SaConfig(realizations=0)
    with pytest.raises(DimensionError):
        bench.simulated_annealing_reference(spectral_decompose(bench.werner(0.7)), (2, 2), 1)


def test_objective_never_below_oracle(rng):
    state = bench.werner(0.75)
    d = spectral_decompose(state)
    oracle = bench.wootters_eof(state).value
    for _ in range(200):
        u = random_stiefel(rng, 6, d.rank)
        assert entanglement_objective(d, u).value >= oracle - 1e-10
