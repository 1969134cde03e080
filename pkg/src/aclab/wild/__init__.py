"""Tree expansion of the Allen-Cahn solution started from small rough data."""

from .bounds import (
    BoundInputs,
    b_eps,
    gamma_a,
    gradient_moment_bound,
    moment_bound,
    remainder_bound,
    s_eps,
)
from .expansion import (
    WildTrajectories,
    compute_X_tau,
    remainder_RN,
    w_approx,
    wild_defect,
    wild_sum,
    wild_trajectories,
)
from .pairings import double_factorial_odd, enumerate_pairings
from .paths import PathDecomposition, path_decompose
from .trees import LEAF, CanonicalTreeClass, TernaryTree, enumerate_ordered_trees, enumerate_trees, node, parse_tree

__all__ = [
    "BoundInputs",
    "CanonicalTreeClass",
    "LEAF",
    "PathDecomposition",
    "TernaryTree",
    "WildTrajectories",
    "b_eps",
    "compute_X_tau",
    "double_factorial_odd",
    "enumerate_ordered_trees",
    "enumerate_pairings",
    "enumerate_trees",
    "gamma_a",
    "gradient_moment_bound",
    "moment_bound",
    "node",
    "parse_tree",
    "path_decompose",
    "remainder_RN",
    "remainder_bound",
    "s_eps",
    "w_approx",
    "wild_defect",
    "wild_sum",
    "wild_trajectories",
]
