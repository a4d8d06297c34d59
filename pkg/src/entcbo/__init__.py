"""Entanglement of formation by structure-preserving consensus-based optimization."""

from .bench import (
    OracleValue,
    SaConfig,
    binary_entropy,
    concurrence,
    horodecki_2x2,
    horodecki_2x4,
    isotropic_3x3,
    isotropic_eof,
    simulated_annealing_reference,
    werner,
    wootters_eof,
)
from .cbo_hermitian import run_hermitian, run_hermitian_projection
from .cbo_unitary import run_unitary, run_unitary_projection
from .ensemble import CboConfig, RunTrace
from .multispecies import run_multispecies
from .quantum import (
    DensityMatrix,
    SpectralDecomposition,
    entanglement_objective,
    spectral_decompose,
    validate_density,
)

__version__ = "0.1.0"
