"""Szegő-type trace asymptotics for the 1D Anderson model.

Restricted traces ``Tr_Λ φ(a_Λ(H))``, their volume term and Gaussian
fluctuations, variance estimators and almost-sure CLT diagnostics.
"""

from .eigen import EigenConvergenceError, EigenDecomposition, eig_tridiagonal, eigvals_tridiagonal, matrix_function
from .estimators import (
    IdsEstimate,
    VarianceEstimate,
    correlation_sum_sigma2,
    free_ids,
    ids_cdf,
    martingale_sigma2,
    positivity_check,
    spectral_average,
)
from .limits import (
    KS_THRESHOLD,
    entanglement_entropy_experiment,
    fluctuation_scan,
    ks_statistic,
    run_asclt,
    run_clt,
)
from .model import (
    Box,
    HypothesisWarning,
    PotentialDistribution,
    SeedPolicy,
    build_hamiltonian,
    check_hypotheses,
    sample_potential,
    spectral_bound,
)
from .symbols import (
    Symbol,
    compose,
    constant_symbol,
    fermi,
    identity_symbol,
    indicator,
    polynomial,
    renyi,
    symbol_from_dict,
    von_neumann,
)
from .szego import (
    BufferedBoxSpec,
    offdiagonal_decay_profile,
    symbol_restriction,
    szego_trace,
    truncation_gap,
    window_insensitivity,
)

__version__ = "0.1.0"
