"""Big-learning EM for Gaussian mixture models.

Joint, marginal and orthogonally transformed marginal EM updates mixed by a
randomized scheduler, plus the metrics, data tools and experiment drivers
used to compare it against plain EM.
"""

from .data import Dataset, load_dataset, make_grid_gmm, minmax_scale, train_test_split
from .em import (
    BigLearnConfig,
    OrthogonalTransform,
    TrainTrace,
    joint_em_step,
    map_weight_update,
    marginal_em_step,
    run_biglearn_em,
    transformed_marginal_em_step,
)
from .errors import BigLearnError
from .gmm import GmmParams, IndexSubset, log_likelihoods, mc_kl, responsibilities, sample
from .metrics import MetricsReport, ari, evaluate, nmi

__all__ = [
    "BigLearnConfig", "BigLearnError", "Dataset", "GmmParams", "IndexSubset", "MetricsReport",
    "OrthogonalTransform", "TrainTrace", "ari", "evaluate", "joint_em_step", "load_dataset",
    "log_likelihoods", "make_grid_gmm", "map_weight_update", "marginal_em_step", "mc_kl",
    "minmax_scale", "nmi", "responsibilities", "run_biglearn_em", "sample", "train_test_split",
    "transformed_marginal_em_step",
]
