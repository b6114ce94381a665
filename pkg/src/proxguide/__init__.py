"""Proximally guided stochastic subgradient methods for weakly convex problems."""
from ._kernels import BACKEND
from .core import Ball, Box, CappedSimplex, Product, RngStream, project, relative_distance
from .inner import InnerRunResult, PssmParams, alpha_schedule, expected_inner_gap_bound, pssm
from .outer import (
    OuterRunResult,
    PfpgsgParams,
    PgsgParams,
    TwoPhaseParams,
    derive_pgsg_params,
    derive_two_phase_params,
    pfpgsg,
    pfpgsg_bound,
    pgsg,
    pgsg_bound,
    sgd_baseline,
    two_phase_pgsg,
)
from .problems import (
    censored_block_oracle,
    phase_retrieval_oracle,
    synthetic_prox_test_oracle,
    trimmed_oracle,
)
from .stationarity import StationarityCertificate, near_stationarity_radius, prox_reference, step_length_check

__version__ = "0.1.0"
