"""Certified upper bounds on weighted connective constants of lattices."""

from .cluster import (
    CertifiedAnchoredBound,
    KPInstance,
    KPResult,
    anchored_sat_bound,
    exact_partial_polys,
    find_epsilon0,
    kp_check,
)
from .estimator import ConnectiveConstantBound, check_weights
from .exceptions import (
    BudgetExceededError,
    ConvergenceError,
    HypothesisError,
    InexactDivisionError,
    LatticeError,
    MatrixFileError,
    NotPrimitiveError,
    SawboundError,
)
from .gmatrix import GMatrix, build_gmatrix, load_gmatrix, matrix_info, save_gmatrix
from .lattice import (
    LatticeSpec,
    SymmetryRep,
    StepRule,
    VertexClassSpec,
    builtin_lattice,
    builtin_names,
    check_lattice,
    classify_vertex,
)
from .poly import Poly, format_poly, parse_poly
from .scan import GridSpec, domain_contains, grid_scan, ray_frontier, validate
from .spectral import CertifiedBound, dominant_eigenvalue, is_primitive, mu_upper_bound
from .walks import Mode, Walk, canonical_key, enumerate_walks, partition_walks, weighted_count

__version__ = "0.1.0"
