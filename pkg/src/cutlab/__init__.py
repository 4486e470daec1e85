"""Exact Chvátal-Gomory cut selection laboratory."""

from ._kernel import BACKEND
from .bnc import BncConfig, BncResult, ScoredCutSet, label_instance, solve_bnc
from .cuts import cg_cut_from_weights, is_valid_cut, parallelism_score, tableau_cg_cuts
from .instance import Cut, IlpInstance
from .lp import LpSolution, LpStatus, solve_lp

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BncConfig",
    "BncResult",
    "Cut",
    "IlpInstance",
    "LpSolution",
    "LpStatus",
    "ScoredCutSet",
    "cg_cut_from_weights",
    "is_valid_cut",
    "label_instance",
    "parallelism_score",
    "solve_bnc",
    "solve_lp",
    "tableau_cg_cuts",
]
