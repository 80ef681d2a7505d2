"""Regression trees split by the squared covariance between the split indicator and the response, with a CART baseline."""

from .data import CriterionKind, Dataset, DataError, NodeRegion, Tree, predict
from .evaluation import empirical_l2_risk, evaluate, generalization_gap, r_squared
from .grower import GrowConfig, grow, grow_full
from .io import load_csv, load_tree, save_tree, split_dataset
from .pruning import PruneSequence, prune_sequence, prune_to_leaves, select_alpha
from .simgen import DgpSpec, generate
from .splitting import SplitCandidate, SplitDecision, best_split, cart_impurity_gain, covrt_criterion

__all__ = [
    "CriterionKind", "Dataset", "DataError", "NodeRegion", "Tree", "predict",
    "empirical_l2_risk", "evaluate", "generalization_gap", "r_squared",
    "GrowConfig", "grow", "grow_full",
    "load_csv", "load_tree", "save_tree", "split_dataset",
    "PruneSequence", "prune_sequence", "prune_to_leaves", "select_alpha",
    "DgpSpec", "generate",
    "SplitCandidate", "SplitDecision", "best_split", "cart_impurity_gain", "covrt_criterion",
]
__version__ = "0.1.0"
