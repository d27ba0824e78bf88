"""LBG clustering on the Grassmannian with Schubert-variety-of-best-fit prototypes."""

__version__ = "0.1.0"

from .data import (
    SubspaceDataset,
    SynthSpec,
    group_into_subspaces,
    load_dataset,
    load_idx_images,
    load_matrix_dataset,
    save_dataset,
    synth_generate,
)
from .lbg import ClusterModel, InitStrategy, LbgConfig, Method, assign, init_prototypes, lbg_cluster, update_prototypes
from .linalg import Subspace, orthonormalize, principal_angles, sin2_theta1, sin_theta_vector
from .metrics import SweepReport, purity, sweep
from .prototypes import FitResult, SvbfConfig, SvbfInit, flag_mean, flag_median, svbf_fit
