"""Column generation and branch-and-price for bin packing with conflicts.

Pricing is pluggable: exact branch-and-bound (single column or a pool of
columns), ant colony optimization, sampling from a learned distribution
(MLPH), and ACO initialized from learned item-membership probabilities
(MLACO and two variants).
"""

from .aco import AcoConfig, AcoState, ConfigurationError, StrategyKind, diversity_sweep, random_sample, run_strategy, selection_probabilities, update_pheromone
from .bnp import BnpResult, BnpStatus, BranchDecision, BranchKind, apply_branch, brute_force_ip, run_bnp
from .cg import CgConfig, CgResult, CgStatus, ColumnPool, Constraints, PricingKind, init_rmp, run_cg
from .features import FEATURE_NAMES, extract_features
from .instance import ConflictGraph, GenConfig, InfeasibleItemError, Instance, ParseError, generate_instance, parse_instance, read_instance, validate_pattern, write_instance
from .ml import LinearModel, SvmConfig, TrainingError, fit_platt, predict_probability, train_svm
from .pricing import PricingProblem, PricingSolution, brute_force_pricing, solve_exact, solve_pool
from .simplex import Basis, Column, LpSolution, LpStatus, solve_rmp
from .training import TrainingExample, collect_training_data

__all__ = [
    "AcoConfig", "AcoState", "Basis", "BnpResult", "BnpStatus", "BranchDecision", "BranchKind",
    "CgConfig", "CgResult", "CgStatus", "Column", "ColumnPool", "ConfigurationError", "ConflictGraph",
    "Constraints", "FEATURE_NAMES", "GenConfig", "InfeasibleItemError", "Instance", "LinearModel",
    "LpSolution", "LpStatus", "ParseError", "PricingKind", "PricingProblem", "PricingSolution",
    "StrategyKind", "SvmConfig", "TrainingError", "TrainingExample", "apply_branch", "brute_force_ip",
    "brute_force_pricing", "collect_training_data", "diversity_sweep", "extract_features", "fit_platt",
    "generate_instance", "init_rmp", "parse_instance", "predict_probability", "random_sample",
    "read_instance", "run_bnp", "run_cg", "run_strategy", "selection_probabilities", "solve_exact",
    "solve_pool", "solve_rmp", "train_svm", "update_pheromone", "validate_pattern", "write_instance",
]
