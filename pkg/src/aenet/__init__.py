"""Auto-encoder based operator learning for 1-D PDE solution maps.

Subpackages: ``discretization`` (grids, quadrature-weighted norms),
``nn`` (numpy MLPs with Adam), ``pde_data`` (IC families, solvers,
datasets), ``reduction`` (PCA and autoencoders), ``operators`` (the
operator models and error metrics), ``experiments`` (sweep harness).
"""

from .discretization import (
    DiscreteFunction,
    Grid1D,
    QuadratureRule,
    box_counting_dimension,
    discretize,
    interpolate,
    make_quadrature,
    weighted_inner,
    weighted_norm,
)
from .experiments import ExperimentConfig, ResultRow
from .nn import MLP, TrainConfig, mlp_init
from .operators import (
    AENetModel,
    DeepONetModel,
    PCANetModel,
    predict_aenet,
    predict_deeponet,
    predict_on_foreign_grid,
    predict_pcanet,
    relative_test_error,
    squared_generalization_error,
    train_aenet_stage2,
    train_deeponet,
    train_pcanet,
)
from .pde_data import FunctionPairDataset, IntrinsicParams, make_dataset
from .reduction import AutoEncoder, PCAModel, fit_pca, train_autoencoder

__version__ = "0.1.0"
