"""Reductions from k-XOR and k-SUM to CNF formulas of small treewidth.

The package builds randomized reductions that come with an explicit tree
decomposition, a dynamic-programming SAT solver over such decompositions,
ground-truth oracles, hash-family checks and a Max-2-SAT to Max-Cut gadget.
"""

from .cnf import CnfFormula, dimacs_read, dimacs_write, primal_graph
from .decomp import Decomposition, to_nice, validate
from .errors import (
    DecompositionError,
    GenerationError,
    ParameterError,
    ParseError,
    ResourceError,
    TwsumError,
)
from .instances import KSumInstance, KXorInstance, generate_no_solution, generate_planted
from .pipeline import ReductionArtifact, reduce, reduce_ksum, reduce_kxor
from .solvers import brute_force, brute_sat, meet_in_the_middle, solve_td

__version__ = "0.1.0"

__all__ = [
    "CnfFormula", "Decomposition", "DecompositionError", "GenerationError", "KSumInstance",
    "KXorInstance", "ParameterError", "ParseError", "ReductionArtifact", "ResourceError",
    "TwsumError", "brute_force", "brute_sat", "dimacs_read", "dimacs_write",
    "generate_no_solution", "generate_planted", "meet_in_the_middle", "primal_graph",
    "reduce", "reduce_ksum", "reduce_kxor", "solve_td", "to_nice", "validate",
]
