"""Pair-correlation statistics of dilated integer sequences on the torus.

The library computes the inhomogeneous pair statistic F(alpha, gamma,
s, n) of integer sequences dilated onto the circle, exact difference
profiles and additive energy, randomized scaled-block constructions
with verified profile properties, and runs seeded Monte Carlo
experiments whose reports are reproducible bit for bit.
"""

__version__ = "0.1.0"

from .corestats import (
    CorrelationResult,
    IntegerSequence,
    RepresentationProfile,
    SequenceError,
    additive_energy,
    correlation_table,
    dilate,
    dilate_rational,
    f_expectation,
    pair_corr_fast,
    pair_corr_naive,
    pair_count_fast,
    pair_count_naive,
    repr_profile,
    variance_bound,
)
from .equidist import (
    FailureReport,
    NonequidistParams,
    OverrepReport,
    PpcBound,
    gamma_ppc_upper_bound,
    interval_count,
    load_points,
    overrep_search,
    rotate_points,
    star_discrepancy,
    verify_ppc_failure,
    window_quadratic_form,
)
from .experiments import (
    CheckReport,
    ExperimentConfig,
    FareyMcReport,
    IndependenceReport,
    McCell,
    McReport,
    ProbeReport,
    energy_ratio_diagnostic,
    expectation_check,
    farey_in_S,
    farey_in_T,
    farey_strip_bound,
    farey_strip_mc,
    indicator_independence_check,
    limsup_probe,
    nearest_farey,
    run_mc,
    totient_sieve,
    u_witness,
    variance_check,
)
from .sequences import (
    BlockBuildError,
    BlockConstruction,
    BlockLevel,
    BlockVerification,
    PsiSpec,
    block_energy_checkpoints,
    build_blocks,
    cross_block_quadruples,
    gen_lacunary,
    gen_powers,
    gen_primes,
    psi_eval,
    verify_block,
)
