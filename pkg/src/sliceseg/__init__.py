"""Slice-wise segmentation and delta geometry coding for voxelized point clouds."""

from .cloud import (
    Axis,
    AxisRange,
    Point,
    PointCloud,
    Side,
    SIDES,
    extract_range,
    remove_range,
)
from .codec import (
    BitBudget,
    DecodedStream,
    DecodeError,
    EncodeError,
    bit_budget,
    decode,
    encode,
    reencode,
)
from .metrics import (
    CompareConfig,
    LossReport,
    baseline_loss,
    compare,
    plan_loss,
    render_csv,
    render_json,
)
from .ply import PlyParseError, read_ply, write_ply
from .projection import (
    CaptureConfig,
    ComponentLabeling,
    ProjectionStats,
    best_plane,
    compute_psi,
    label_components,
    projected_area,
    simulate_capture,
)
from .slicer import (
    PlanMismatchError,
    SlicePlan,
    SliceSpec,
    SlicerConfig,
    best_width,
    build_plan,
    candidate_psi,
    extract_slices,
    plan_from_json,
    plan_to_json,
    select_slice,
)
from .synthetic import gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "AxisRange",
    "BitBudget",
    "CaptureConfig",
    "CompareConfig",
    "ComponentLabeling",
    "DecodeError",
    "DecodedStream",
    "EncodeError",
    "LossReport",
    "PlanMismatchError",
    "PlyParseError",
    "Point",
    "PointCloud",
    "ProjectionStats",
    "SIDES",
    "Side",
    "SlicePlan",
    "SliceSpec",
    "SlicerConfig",
    "baseline_loss",
    "best_plane",
    "best_width",
    "bit_budget",
    "build_plan",
    "candidate_psi",
    "compare",
    "compute_psi",
    "decode",
    "encode",
    "extract_range",
    "extract_slices",
    "gen_synthetic",
    "label_components",
    "plan_from_json",
    "plan_loss",
    "plan_to_json",
    "projected_area",
    "read_ply",
    "reencode",
    "remove_range",
    "render_csv",
    "render_json",
    "select_slice",
    "simulate_capture",
    "write_ply",
]
