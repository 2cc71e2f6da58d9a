"""Spectral gradient flow of boundary maps and flat cylinder metrics.

Boundary maps from the unit disc or a flat cylinder into a target
submanifold N of R^n evolve by the tangential Dirichlet-to-Neumann
operator; on the cylinder the conformal parameter a evolves with them.
"""
import os as _os

_threads = _os.environ.get("FLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .spectral import (  # noqa: E402
    BoundaryField,
    CylinderMetric,
    Domain,
    GridTooSmall,
    HarmonicExtension,
    analyze,
    boundary_inner,
    boundary_norm,
    dtn,
    half_energy,
    harmonic_extend,
    synthesize,
    tangential_derivative,
)
from .targets import (  # noqa: E402
    CirclePairTarget,
    CutLocusAmbiguity,
    OutsideTubularNeighbourhood,
    SphereTarget,
    TargetManifold,
    make_target,
)
from .metric import (  # noqa: E402
    StressEnergy,
    collar_density,
    collar_width,
    energy_metric_derivative,
    horizontal_pairing,
    horizontal_project,
    horizontal_residual,
    injectivity_radius,
    metric_velocity,
    stress_energy,
)
from .diagnostics import (  # noqa: E402
    CatenoidReference,
    NoCatenoid,
    ResidualReport,
    catenoid_reference,
    conformality_residual,
    fd_check_map_variation,
    fd_check_metric_variation,
    local_energy_scan,
    residuals,
    straight_cylinder,
    winding_number,
)
from .flow import (  # noqa: E402
    FlowConfig,
    FlowState,
    RunRecord,
    StepRejected,
    Termination,
    energy_decay_check,
    map_velocity,
    map_velocity_eps,
    run,
    step,
)

__all__ = [
    "BACKEND",
    "BoundaryField",
    "CylinderMetric",
    "Domain",
    "GridTooSmall",
    "HarmonicExtension",
    "analyze",
    "boundary_inner",
    "boundary_norm",
    "dtn",
    "half_energy",
    "harmonic_extend",
    "synthesize",
    "tangential_derivative",
    "CirclePairTarget",
    "CutLocusAmbiguity",
    "OutsideTubularNeighbourhood",
    "SphereTarget",
    "TargetManifold",
    "make_target",
    "StressEnergy",
    "collar_density",
    "collar_width",
    "energy_metric_derivative",
    "horizontal_pairing",
    "horizontal_project",
    "horizontal_residual",
    "injectivity_radius",
    "metric_velocity",
    "stress_energy",
    "CatenoidReference",
    "NoCatenoid",
    "ResidualReport",
    "catenoid_reference",
    "conformality_residual",
    "fd_check_map_variation",
    "fd_check_metric_variation",
    "local_energy_scan",
    "residuals",
    "straight_cylinder",
    "winding_number",
    "FlowConfig",
    "FlowState",
    "RunRecord",
    "StepRejected",
    "Termination",
    "energy_decay_check",
    "map_velocity",
    "map_velocity_eps",
    "run",
    "step",
    "__version__",
]
