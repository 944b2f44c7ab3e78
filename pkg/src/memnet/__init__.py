"""memnet: optimal one-dimensional reinforcing networks for elastic
membranes.

A membrane fixed at its boundary is stiffened by a connected network of
total mass L; the network maximizes the compliance-type energy of the
membrane. The discrete model couples P1 finite elements on a triangulation
with spanning trees over movable points carrying per-arc multiplicities;
search runs a seeded evolution strategy plus a derivative-free local
refinement.
"""

from .geometry import DiskDomain, PolygonDomain
from .mesh import (
    FemSystem,
    MeshFormatError,
    MeshValidationError,
    TriangleMesh,
    assemble_fem,
    domain_from_mesh,
    generate_disk_mesh,
    load_mesh,
    save_mesh,
)
from .network import (
    DegenerateNetworkError,
    NetworkParams,
    SpanningTree,
    WeightedNetwork,
    apply_homothety,
    build_mst,
    clamp_to_domain,
    load_network,
    resample_network,
    save_network,
)
from .optimize import (
    ConfigError,
    OptimConfig,
    OptimResult,
    decode,
    encode,
    global_search,
    local_refine,
    optimize,
)
from .projection import InfeasibleProjectionError, make_admissible, project_weights
from .solver import (
    CostReport,
    Evaluator,
    ReinforcedSystem,
    SolveConfig,
    SolverConvergenceError,
    assemble_system,
    evaluate_cost,
    evaluate_energy,
    solve,
)
from .spatial import OUTSIDE, SpatialIndex, build_spatial_index, locate
from .transfer import (
    GeometryError,
    LoadSpec,
    accumulate_vlengths,
    arc_pieces,
    assemble_load,
    segment_triangle_length,
)

__version__ = "0.1.0"
