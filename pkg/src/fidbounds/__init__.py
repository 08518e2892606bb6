"""Fidelity, its computable bounds, induced distances and SWAP-test simulation."""

from .errors import *  # noqa: F401,F403
from .fidelity import (
    FidelityReport,
    Rank3Residuals,
    bound_chain,
    classical_fidelity,
    depolarized_closed_forms,
    depolarized_crossover,
    depolarized_matrix_path,
    fidelity,
    rank3_relations,
    rank_symmetric_bound,
    root_fidelity,
    sub_fidelity,
    super_fidelity,
)
from .geometry import (
    DistanceReport,
    bures_metrics,
    distance_report,
    embed,
    flat_metrics,
    g_metrics,
    triangle_audit,
    uhlmann_hemisphere,
)
from .linalg import (
    BlochVector,
    DensityMatrix,
    EigDecomposition,
    HermitianMatrix,
    Spectrum,
    bloch_map,
    bloch_unmap,
    elementary_symmetric,
    hermitian_eig,
    lorentz_form,
    psd_sqrt,
    trace_norm,
    validate_density,
)
from .randgen import StateSpec, haar_pure, induced_mixed, make_state, structured_pair

__version__ = "0.1.0"
