"""Content-aware image and video retargeting.

Importance-driven resizing by two operators: seam carving (discrete
removal or insertion of 8-connected pixel paths) and patch-based mesh
warping (a sparse least-squares deformation over a segmentation of the
image).  Every operator records the deformation it applied, and the
aspect-ratio similarity metric scores those records.
"""

from .energy import (
    CARRY,
    COMMAND,
    GRADIENT,
    RECOMPUTE,
    STATIC_MAP,
    EnergyProvider,
    command_provider,
    energy_for_iteration,
    gradient_energy,
    gradient_provider,
    run_provider_command,
    static_map_provider,
)
from .errors import (
    CoverageError,
    DecodeError,
    DegenerateMesh,
    DegenerateTarget,
    DimensionMismatch,
    Foldover,
    FrameDimensionMismatch,
    InvalidSeam,
    KindMismatch,
    NonConvergence,
    ProviderFailure,
    RetargetError,
    ZeroDimension,
)
from .fields import (
    MESH,
    SEAM_INSERTION,
    SEAM_REMOVAL,
    DeformationField,
    MeshStage,
    SeamRecord,
    load_field,
    map_points,
    parse_field,
    removed_source_pixels,
    save_field,
    serialize_field,
)
from .metrics import ArsCell, ArsReport, ars, energy_retention
from .raster import (
    ImportanceMap,
    RasterImage,
    TargetSpec,
    load_image,
    load_importance,
    save_image,
    save_importance,
    save_labels_pgm,
)
from .seam import Seam, SeamPlan, insert_seams, min_seam, plan, remove_seam, retarget_seam
from .segment import Patch, PatchMap, SegmentationParams, patch_energy, segment
from .warp import (
    LEGACY_IMAGE,
    LEGACY_VIDEO,
    MODIFIED_IMAGE,
    MODIFIED_VIDEO,
    MeshGrid,
    WarpEnergyConfig,
    WarpObjective,
    assemble_energy,
    build_mesh,
    render_warp,
    retarget_video,
    solve_warp,
)

__version__ = "1.0.0"

__all__ = [
    "ArsCell",
    "ArsReport",
    "CARRY",
    "COMMAND",
    "CoverageError",
    "DecodeError",
    "DeformationField",
    "DegenerateMesh",
    "DegenerateTarget",
    "DimensionMismatch",
    "EnergyProvider",
    "Foldover",
    "FrameDimensionMismatch",
    "GRADIENT",
    "ImportanceMap",
    "InvalidSeam",
    "KindMismatch",
    "LEGACY_IMAGE",
    "LEGACY_VIDEO",
    "MESH",
    "MODIFIED_IMAGE",
    "MODIFIED_VIDEO",
    "MeshGrid",
    "MeshStage",
    "NonConvergence",
    "Patch",
    "PatchMap",
    "ProviderFailure",
    "RECOMPUTE",
    "RasterImage",
    "RetargetError",
    "STATIC_MAP",
    "Seam",
    "SeamPlan",
    "SeamRecord",
    "SegmentationParams",
    "TargetSpec",
    "WarpEnergyConfig",
    "WarpObjective",
    "ZeroDimension",
    "ars",
    "assemble_energy",
    "build_mesh",
    "command_provider",
    "energy_for_iteration",
    "energy_retention",
    "gradient_energy",
    "gradient_provider",
    "insert_seams",
    "load_field",
    "load_image",
    "load_importance",
    "map_points",
    "min_seam",
    "parse_field",
    "patch_energy",
    "plan",
    "remove_seam",
    "removed_source_pixels",
    "render_warp",
    "retarget_seam",
    "retarget_video",
    "run_provider_command",
    "save_field",
    "save_image",
    "save_importance",
    "save_labels_pgm",
    "segment",
    "serialize_field",
    "solve_warp",
    "static_map_provider",
]
