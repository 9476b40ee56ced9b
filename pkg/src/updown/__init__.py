"""Exact analysis and simulation of up-down duplication Markov chains.

Two instances of one structure: point duplication on permutations and
vertex duplication on unlabeled graphs.  Both satisfy the commutation
relation U_n D_{n+1} = beta_n D_n U_{n-1} + (1 - beta_n) I with
beta_n = (n-1)/(n+1), which yields the full spectral decomposition, the
stationary measures, and closed-form separation distances implemented
here in exact rational arithmetic, alongside reproducible Monte Carlo
estimators and the semi-discrete inflation approximation of the limiting
measure-valued dynamics.
"""
from . import graphs, kernels, montecarlo, permutations, rng, semidiscrete, separation
from .kernels import (
    ChainSpec,
    LevelCapError,
    StochKernel,
    beta,
    build_down_kernel,
    build_up_kernel,
    density_vector,
    eigenfunction,
    eigenvalue,
    eta_coeff,
    omega,
    rate,
    spectrum_report,
    stationary,
    theta_coeff,
    updown_operator,
    verification_report,
    verify_commutation,
)
from .montecarlo import DensityCurve, SimConfig, emit_frames, estimate_density_curve
from .rng import SplitMix64, substream_seed
from .semidiscrete import (
    PermutationSquares,
    PermutonMeasure,
    generator_limit_check,
    inf_eps_polynomial,
    inflate_measure,
    permuton_density_exact,
    uniform_diagonal,
)
from .separation import (
    sepdist_bruteforce,
    sepdist_continuous,
    sepdist_discrete,
    sepdist_formula_generic,
    sepdist_limit,
)

__version__ = "0.1.0"

__all__ = [
    "ChainSpec",
    "DensityCurve",
    "LevelCapError",
    "PermutationSquares",
    "PermutonMeasure",
    "SimConfig",
    "SplitMix64",
    "StochKernel",
    "beta",
    "build_down_kernel",
    "build_up_kernel",
    "density_vector",
    "eigenfunction",
    "eigenvalue",
    "emit_frames",
    "estimate_density_curve",
    "eta_coeff",
    "generator_limit_check",
    "graphs",
    "inf_eps_polynomial",
    "inflate_measure",
    "kernels",
    "montecarlo",
    "omega",
    "permutations",
    "permuton_density_exact",
    "rate",
    "rng",
    "semidiscrete",
    "separation",
    "sepdist_bruteforce",
    "sepdist_continuous",
    "sepdist_discrete",
    "sepdist_formula_generic",
    "sepdist_limit",
    "spectrum_report",
    "stationary",
    "substream_seed",
    "theta_coeff",
    "uniform_diagonal",
    "updown_operator",
    "verification_report",
    "verify_commutation",
]
