"""Tensorization of univariate functions on [0,1) into base-b tensors,
tensor-train compression over dilation-closed polynomial spaces, and the
associated complexity measures and experiment drivers."""

from .badic import BaseBCoordinate, decode, encode, recompose
from .localspace import PolySpace, legendre_values
from .tensorized import (BudgetError, DEFAULT_BUDGET, RankProfile,
                         TensorizedFunction)
from .train import (ComplexityReport, CPRep, TensorTrain, complexity,
                    cost_cp, cost_dense, cost_rmax, cost_sparse,
                    cost_sum_ranks, cp_from_tensorized, cp_to_tt,
                    maxrank_growth, maxrank_pair, tt_svd)
from .approx import (ClassSeminormEstimate, ErrorCurvePoint, class_seminorm,
                     corpus_functions, density_sweep, error_curve,
                     lemma_corpus, random_cp, random_train)

__all__ = [
    "BaseBCoordinate", "decode", "encode", "recompose",
    "PolySpace", "legendre_values",
    "BudgetError", "DEFAULT_BUDGET", "RankProfile", "TensorizedFunction",
    "ComplexityReport", "CPRep", "TensorTrain", "complexity", "cost_cp",
    "cost_dense", "cost_rmax", "cost_sparse", "cost_sum_ranks",
    "cp_from_tensorized", "cp_to_tt", "maxrank_growth", "maxrank_pair",
    "tt_svd",
    "ClassSeminormEstimate", "ErrorCurvePoint", "class_seminorm",
    "corpus_functions", "density_sweep", "error_curve", "lemma_corpus",
    "random_cp", "random_train",
]

__version__ = "0.1.0"
