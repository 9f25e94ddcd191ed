"""Random (alpha, theta) binary trees, ordered Chinese restaurants and their limits."""

from .params import Params, parameter_grid, to_fraction
from .rng import run_replicates, stream
from .trees import (EdgeLengthTree, InvalidTreeError, LabeledBinaryTree, TreeShape,
                    delabel, reduce, reduce_with_lengths, spinal_composition, validate)
from .crp import Composition, OrderedCrpState

__all__ = [
    "Params", "parameter_grid", "to_fraction", "run_replicates", "stream",
    "EdgeLengthTree", "InvalidTreeError", "LabeledBinaryTree", "TreeShape", "delabel",
    "reduce", "reduce_with_lengths", "spinal_composition", "validate",
    "Composition", "OrderedCrpState",
]

__version__ = "0.1.0"
