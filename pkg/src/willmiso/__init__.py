"""Willmore energy minimization on closed triangle meshes at prescribed isoperimetric ratio."""

__version__ = "0.1.0"

from .errors import (
    BisectionFailed,
    DegenerateNormal,
    FitDiverged,
    LineSearchFailed,
    MeshDegenerated,
    MeshValidationError,
    NonPositiveVolume,
    PoleInput,
    ProjectionStalled,
    QuadratureNotConverged,
    RecursionHypothesisViolated,
    WillmisoError,
)
from .functionals import (
    SurfaceMetrics,
    gauss_curvature,
    iso_ratio,
    mean_curvature_vector,
    metrics,
    willmore_energy,
)
from .mesh import (
    TriMesh,
    ValidationReport,
    enclosed_volume,
    icosphere,
    outward_normals,
    read_obj,
    subdivide,
    total_area,
    validate,
    vertex_areas,
    write_obj,
    write_ply,
)

__all__ = [
    "TriMesh",
    "ValidationReport",
    "SurfaceMetrics",
    "validate",
    "total_area",
    "enclosed_volume",
    "vertex_areas",
    "outward_normals",
    "icosphere",
    "subdivide",
    "read_obj",
    "write_obj",
    "write_ply",
    "mean_curvature_vector",
    "gauss_curvature",
    "willmore_energy",
    "iso_ratio",
    "metrics",
    "WillmisoError",
    "MeshValidationError",
    "DegenerateNormal",
    "NonPositiveVolume",
    "PoleInput",
    "QuadratureNotConverged",
    "BisectionFailed",
    "ProjectionStalled",
    "LineSearchFailed",
    "MeshDegenerated",
    "FitDiverged",
    "RecursionHypothesisViolated",
]
