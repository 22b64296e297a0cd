"""Mach-Zehnder phase sensing with a coherent and a squeezed input, in a truncated Fock basis."""

__version__ = "0.1.0"

from .counting import CountDistribution, CountModel, classical_fisher, classical_fisher_nd_only, count_distribution
from .entanglement import entropy_comparison, product_criterion, reduced_spectrum
from .errors import (
    ConfigError,
    DegeneratePosterior,
    FlatLikelihood,
    NotConverged,
    OutOfFringeRange,
    SimulationError,
    SingularFisher,
    SweepBracketFailure,
    TruncationTooSmall,
)
from .estimation import (
    Bayesian,
    ExperimentConfig,
    LinearFringe,
    MaximumLikelihood,
    bayes_estimate,
    linear_fringe_estimate,
    ml_estimate,
    run_experiment,
    sample_counts,
)
from .fisher import FisherMatrix, fmax_bound, qcrb_check, qfi_from_covariance, qfi_from_derivatives, qfi_product_analytic
from .fock import ModeState, TruncationPolicy, TwoModeState, make_coherent, make_number, make_squeezed_vacuum, tensor
from .interferometer import PhasePair, beam_splitter, mach_zehnder
from .optimizer import OptimizationProblem, maximize_fdd_eigensweep, maximize_fdd_gradient
