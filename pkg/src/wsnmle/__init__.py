"""Consensus-based decentralized ML estimation for wireless sensor networks.

The package covers the full pipeline: topology generation, the
complex linear-Gaussian observation model, information-driven compression
and centralized ML fusion, ADMM average consensus delivering the same
estimate at every node, and cyclic sensor-gain optimization.
"""

from .consensus import AdmmConfig, ConsensusState, DecentralizedRun, admm_step, decentralized_mle, run_average_consensus
from .fusion import (
    GlobalModel,
    SelectionPlan,
    build_global_model,
    decompose_information,
    information_total,
    ml_estimate,
    ml_variance,
    sample_received,
    select_retainers,
)
from .gain_optimizer import (
    AuxVector,
    OptimizerConfig,
    OptTrace,
    build_Q,
    build_R,
    eta0_bound,
    g_value,
    optimize,
    power_iterate,
    update_y,
)
from .network_model import (
    GainDomain,
    GainVector,
    LocalModel,
    NetworkModel,
    ObservationDraw,
    information_value,
    load_network,
    local_model,
    local_noise_covariance,
    node_information,
    sample_channels,
    sample_observations,
    save_network,
)
from .topology import Graph, build_graph, degree, load_graph, random_connected_graph, save_graph

__version__ = "0.1.0"
