"""Finite martingale machinery: random subordinate trees, the extremal
chains with exact terminal statistics, chain-based lower bounds and the
Haar sign-change check."""
from .chains import (
    ChainMC,
    ChainParams,
    ChainStats,
    MCEstimate,
    extremal_chain,
    extremal_chain_case1,
    extremal_chain_case2,
    limit_Ef_p_case2,
    simulate_chain_mc,
)
from .haar import haar_synthesis, verify_haar_unconditionality
from .lower_bound import LowerBound, calibrated_lower_bound, lower_bound, lower_bound_value
from .trees import InvalidTreeError, MartingaleTree, random_ds_pair, subordination_scale, verify_subordination_bound

__all__ = [
    "ChainMC",
    "ChainParams",
    "ChainStats",
    "InvalidTreeError",
    "LowerBound",
    "MCEstimate",
    "MartingaleTree",
    "calibrated_lower_bound",
    "extremal_chain",
    "extremal_chain_case1",
    "extremal_chain_case2",
    "haar_synthesis",
    "limit_Ef_p_case2",
    "lower_bound",
    "lower_bound_value",
    "random_ds_pair",
    "simulate_chain_mc",
    "subordination_scale",
    "verify_haar_unconditionality",
    "verify_subordination_bound",
]
