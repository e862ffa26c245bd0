"""Simulation and analysis toolkit for phase-encoded coherent-state links.

Subpackages cover constellation construction, the photon-counting
interferometric receiver and its ideal homodyne benchmark, mutual-information
and key-rate evaluation, phase metrology (Allan deviation, spectral density),
a closed-loop phase-lock simulator, and a shot-by-shot detector Monte Carlo.
"""

__version__ = "0.1.0"

from .constellation import (
    Constellation,
    CoherentSymbol,
    apply_loss,
    build_psk,
    check_gus,
    loss_db_to_transmissivity,
)
from .homodyne import HomodyneParams, hd_conditional_pdf, hd_mutual_information
from .info_metrics import MiResult, plugin_mi_estimate, shannon_entropy, wf_mutual_information
from .security import Ensemble, KgrResult, coherent_overlap, kgr, vn_entropy
from .wf_receiver import (
    DiffDistribution,
    JointPnrDistribution,
    WfReceiverParams,
    branch_means,
    difference_dist,
    joint_pnr_conditional,
    joint_pnr_marginal,
)

__all__ = [
    "__version__",
    "Constellation",
    "CoherentSymbol",
    "apply_loss",
    "build_psk",
    "check_gus",
    "loss_db_to_transmissivity",
    "HomodyneParams",
    "hd_conditional_pdf",
    "hd_mutual_information",
    "MiResult",
    "plugin_mi_estimate",
    "shannon_entropy",
    "wf_mutual_information",
    "Ensemble",
    "KgrResult",
    "coherent_overlap",
    "kgr",
    "vn_entropy",
    "DiffDistribution",
    "JointPnrDistribution",
    "WfReceiverParams",
    "branch_means",
    "difference_dist",
    "joint_pnr_conditional",
    "joint_pnr_marginal",
]
