"""Data-loss quantification: slice plans vs fixed-layer whole-cloud baselines.

Loss is the fraction of the deduplicated original points that the capture
model cannot represent: components are projected on their best plane and a
fixed number of depth layers keeps one (or two) points per pixel. The
slice-plan strategy applies the same model per extracted slice and unions
the captured sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import PointCloud
from .codec import bit_budget
from .projection import CaptureConfig, best_plane, label_components, simulate_capture
from .slicer import SlicePlan, SlicerConfig, build_plan, extract_slices

BASELINES = ("single-layer", "dual-layer")
PLAN_STRATEGY = "slice-plan"

CSV_HEADER = "strategy,points,captured,lost,loss_fraction,slices,header_bits,payload_bits"


@dataclass(frozen=True)
class SliceCapture:
    index: int
    points: int
    captured: int


@dataclass(frozen=True)
class LossReport:
    strategy: str
    total: int
    captured: int
    per_slice: Optional[tuple[SliceCapture, ...]] = None

    @property
    def lost(self) -> int:
        return self.total - self.captured

    @property
    def loss_fraction(self) -> float:
        return self.lost / self.total


@dataclass(frozen=True)
class CompareConfig:
    slicer: SlicerConfig = SlicerConfig()
    baselines: tuple[str, ...] = BASELINES
    capture: CaptureConfig = CaptureConfig(layer_mode="dual", surface_thickness=4)

    def __post_init__(self) -> None:
        if not self.baselines:
            raise ValueError("at least one baseline is required")
        for name in self.baselines:
            if name not in BASELINES:
                raise ValueError(f"unknown baseline {name!r} (choose from {BASELINES})")


def _captured_keys(cloud: PointCloud, config: CaptureConfig) -> np.ndarray:
    """Coordinate keys captured by per-component best-plane projection."""
    labeling = label_components(cloud)
    captured = []
    for k in range(labeling.count):
        component = cloud.subset(labeling.labels == k)
        axis, _ = best_plane(component)
        kept = simulate_capture(component, axis, config)
        captured.append(kept.coordinate_keys())
    return np.unique(np.concatenate(captured))


def baseline_loss(cloud: PointCloud, capture: CaptureConfig) -> LossReport:
    """Whole-cloud capture with a fixed layer count."""
    if len(cloud) == 0:
        raise ValueError("cannot measure loss of an empty cloud")
    name = "single-layer" if capture.layer_mode == "single" else "dual-layer"
    captured = _captured_keys(cloud, capture)
    return LossReport(strategy=name, total=len(cloud), captured=int(captured.shape[0]))


def plan_loss(cloud: PointCloud, plan: SlicePlan) -> LossReport:
    """Single-layer capture per extracted slice, captured sets unioned.

    Overlap bands participate in capture; duplicates across slices count
    once toward the captured total.
    """
    slices = extract_slices(cloud, plan)
    single = CaptureConfig(layer_mode="single")
    union: Optional[np.ndarray] = None
    breakdown = []
    for spec, slice_cloud in slices:
        keys = _captured_keys(slice_cloud, single)
        breakdown.append(
            SliceCapture(index=spec.index, points=len(slice_cloud), captured=int(keys.shape[0]))
        )
        union = keys if union is None else np.union1d(union, keys)
    captured = int(union.shape[0]) if union is not None else 0
    return LossReport(
        strategy=PLAN_STRATEGY,
        total=len(cloud),
        captured=captured,
        per_slice=tuple(breakdown),
    )


def compare(cloud: PointCloud, config: CompareConfig = CompareConfig()) -> list[dict]:
    """One row per strategy: each requested baseline, then the slice plan."""
    rows = []
    for name in BASELINES:
        if name not in config.baselines:
            continue
        mode = "single" if name == "single-layer" else "dual"
        capture = CaptureConfig(
            layer_mode=mode, surface_thickness=config.capture.surface_thickness
        )
        report = baseline_loss(cloud, capture)
        rows.append(_row(report, slices=None, budget=None))

    plan = build_plan(cloud, config.slicer)
    report = plan_loss(cloud, plan)
    budget = bit_budget(plan, cloud.bit_depth, extract_slices(cloud, plan))
    rows.append(_row(report, slices=len(plan.slices), budget=budget))
    return rows


def _row(report: LossReport, slices, budget) -> dict:
    return {
        "strategy": report.strategy,
        "points": report.total,
        "captured": report.captured,
        "lost": report.lost,
        "loss_fraction": report.loss_fraction,
        "slices": slices,
        "header_bits": budget.header_bits if budget is not None else None,
        "payload_bits": budget.payload_bits if budget is not None else None,
    }


def render_csv(rows: list[dict]) -> str:
    """Fixed schema, LF endings, 6-decimal loss fractions; blanks where n/a."""
    lines = [CSV_HEADER]
    for row in rows:
        cells = [
            row["strategy"],
            str(row["points"]),
            str(row["captured"]),
            str(row["lost"]),
            f"{row['loss_fraction']:.6f}",
            "" if row["slices"] is None else str(row["slices"]),
            "" if row["header_bits"] is None else str(row["header_bits"]),
            "" if row["payload_bits"] is None else str(row["payload_bits"]),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"
