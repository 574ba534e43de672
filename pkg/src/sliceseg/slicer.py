"""Variable-width slicing planner.

Each round evaluates candidate slabs from all six bounding-box faces at
every width up to the configured maximum, scores each candidate by the
fraction of points a single-layer projection would lose, takes the best
one as the next slice, and recurses on the remainder. Slices below the
point-count threshold are never emitted; whatever remains at the end
becomes one terminal segment so no point is ever dropped at planning
stage. Extracted slices can be widened inward by a small overlap margin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Union

import numpy as np

from .cloud import Axis, AxisRange, PointCloud, Side, SIDES, axis_from_name, extract_range, remove_range
from .projection import ProjectionStats, compute_psi

PLANE_RULES = ("best-plane", "fixed-plane")

# A slice needs at least this many points regardless of the fractional
# threshold; a width search over fewer is meaningless.
MIN_SLICE_POINTS = 2


class PlanMismatchError(ValueError):
    """Plan and cloud disagree (size or replayed slice membership)."""


def _as_fraction(value: Union[str, float, int, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class SlicerConfig:
    """Planner knobs: max width, point threshold, overlap margin, plane rule."""

    theta: int = 64
    threshold_frac: Fraction = Fraction(1, 20)
    overlap: int = 2
    plane_rule: str = "best-plane"

    def __post_init__(self) -> None:
        object.__setattr__(self, "threshold_frac", _as_fraction(self.threshold_frac))
        if self.theta < 1:
            raise ValueError("theta must be >= 1")
        if not (0 <= self.threshold_frac < 1):
            raise ValueError("threshold_frac must be in [0, 1)")
        if self.overlap < 0:
            raise ValueError("overlap must be >= 0")
        if self.plane_rule not in PLANE_RULES:
            raise ValueError(f"plane_rule must be one of {PLANE_RULES}")

    def min_points(self, original_size: int) -> Fraction:
        return max(Fraction(MIN_SLICE_POINTS), self.threshold_frac * original_size)


@dataclass(frozen=True)
class SliceSpec:
    """One planned slice: exclusive core band plus the overlap-extended band."""

    index: int
    side: Side
    core: AxisRange
    extended: AxisRange
    point_count: int
    psi: float
    terminal: bool = False

    def __post_init__(self) -> None:
        if self.core.axis != self.extended.axis:
            raise ValueError("core and extended ranges must share an axis")
        if not (self.extended.lo <= self.core.lo and self.core.hi <= self.extended.hi):
            raise ValueError("extended range must contain the core")


@dataclass(frozen=True)
class SlicePlan:
    config: SlicerConfig
    original_size: int
    slices: tuple[SliceSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slices", tuple(self.slices))


class Candidate(NamedTuple):
    """Width-search result; lost/count give the loss fraction exactly."""

    side: Side
    width: int
    core: AxisRange
    count: int
    lost: int
    stats: ProjectionStats

    @property
    def psi(self) -> float:
        return self.lost / self.count


def _loss_lt(lost_a: int, count_a: int, lost_b: int, count_b: int) -> bool:
    """Exact fraction compare: lost_a/count_a < lost_b/count_b."""
    return lost_a * count_b < lost_b * count_a


def _core_range(side: Side, mins: np.ndarray, maxs: np.ndarray, width: int) -> AxisRange:
    axis = side.axis
    if side.positive:
        hi = int(maxs[axis]) + 1
        return AxisRange(axis, hi - width, hi)
    lo = int(mins[axis])
    return AxisRange(axis, lo, lo + width)


def candidate_psi(
    cloud: PointCloud, side: Side, width: int, plane_rule: str = "best-plane"
) -> tuple[int, Optional[float]]:
    """Point count and loss fraction of the width-`width` slab on `side`.

    The slab runs inward from the cloud's bounding-box face. Returns
    (0, None) when the slab is empty.
    """
    if len(cloud) == 0:
        raise ValueError("cannot slice an empty cloud")
    if width < 1:
        raise ValueError("width must be >= 1")
    mins, maxs = cloud.bbox
    core = _core_range(side, mins, maxs, min(width, cloud.extent(side.axis)))
    sub = extract_range(cloud, core)
    if len(sub) == 0:
        return 0, None
    axis = side.axis if plane_rule == "fixed-plane" else None
    return len(sub), compute_psi(sub, axis=axis).psi


def best_width(
    cloud: PointCloud, side: Side, config: SlicerConfig, original_size: int
) -> Optional[Candidate]:
    """Best slab width on one side: least loss, ties to the larger width.

    Only widths holding at least the threshold point count compete; returns
    None (side exhausted) when none does. Widths are capped at the cloud's
    extent along the axis, so degenerate duplicates of the full slab never
    enter the tie-break.
    """
    mins, maxs = cloud.bbox
    axis = side.axis
    w_max = min(config.theta, cloud.extent(axis))
    min_points = config.min_points(original_size)

    column = np.sort(cloud.coords[:, axis])
    fixed_axis = axis if config.plane_rule == "fixed-plane" else None

    best: Optional[Candidate] = None
    prev: Optional[Candidate] = None
    for width in range(1, w_max + 1):
        core = _core_range(side, mins, maxs, width)
        if side.positive:
            count = len(column) - int(np.searchsorted(column, core.lo, side="left"))
        else:
            count = int(np.searchsorted(column, core.hi, side="left"))
        if count < min_points:
            continue
        if prev is not None and count == prev.count:
            # Nested ranges with equal counts select the same point set.
            cand = Candidate(side, width, core, count, prev.lost, prev.stats)
        else:
            sub = extract_range(cloud, core)
            stats = compute_psi(sub, axis=fixed_axis)
            cand = Candidate(side, width, core, count, stats.lost, stats)
        prev = cand
        if best is None or not _loss_lt(best.lost, best.count, cand.lost, cand.count):
            best = cand
    return best


def _extend_inward(
    side: Side, core: AxisRange, mins: np.ndarray, maxs: np.ndarray, overlap: int
) -> AxisRange:
    axis = side.axis
    if side.positive:
        lo = max(core.lo - overlap, int(mins[axis]))
        return AxisRange(axis, lo, core.hi)
    hi = min(core.hi + overlap, int(maxs[axis]) + 1)
    return AxisRange(axis, core.lo, hi)


def select_slice(
    cloud: PointCloud, config: SlicerConfig, original_size: int, index: int = 0
) -> Optional[SliceSpec]:
    """Best candidate over all six sides, or None when every side is exhausted.

    Ties break toward the larger width, then toward the fixed side order
    +X, -X, +Y, -Y, +Z, -Z.
    """
    if len(cloud) == 0:
        raise ValueError("cannot slice an empty cloud")
    best: Optional[Candidate] = None
    for side in SIDES:
        cand = best_width(cloud, side, config, original_size)
        if cand is None:
            continue
        if best is None:
            best = cand
            continue
        if _loss_lt(cand.lost, cand.count, best.lost, best.count):
            best = cand
        elif not _loss_lt(best.lost, best.count, cand.lost, cand.count):
            if cand.width > best.width:
                best = cand
    if best is None:
        return None
    mins, maxs = cloud.bbox
    extended = _extend_inward(best.side, best.core, mins, maxs, config.overlap)
    return SliceSpec(
        index=index,
        side=best.side,
        core=best.core,
        extended=extended,
        point_count=best.count,
        psi=best.psi,
        terminal=False,
    )


def _terminal_spec(residue: PointCloud, config: SlicerConfig, index: int) -> SliceSpec:
    mins, maxs = residue.bbox
    extents = maxs - mins + 1
    axis = Axis(int(np.argmin(extents)))
    core = AxisRange(axis, int(mins[axis]), int(maxs[axis]) + 1)
    fixed_axis = axis if config.plane_rule == "fixed-plane" else None
    stats = compute_psi(residue, axis=fixed_axis)
    return SliceSpec(
        index=index,
        side=Side(axis, -1),
        core=core,
        extended=core,
        point_count=len(residue),
        psi=stats.psi,
        terminal=True,
    )


def build_plan(cloud: PointCloud, config: SlicerConfig = SlicerConfig()) -> SlicePlan:
    """Slice greedily until the remainder is empty, below threshold, or stuck.

    Every original point lands in exactly one core (ordinary or terminal);
    the result is deterministic for a given (cloud, config).
    """
    if len(cloud) == 0:
        raise ValueError("cannot plan an empty cloud")
    original_size = len(cloud)
    min_points = config.min_points(original_size)

    slices: list[SliceSpec] = []
    working = cloud
    while len(working) > 0:
        if len(working) < min_points:
            slices.append(_terminal_spec(working, config, len(slices)))
            break
        spec = select_slice(working, config, original_size, index=len(slices))
        if spec is None:
            slices.append(_terminal_spec(working, config, len(slices)))
            break
        slices.append(spec)
        working = remove_range(working, spec.core)
    return SlicePlan(config=config, original_size=original_size, slices=tuple(slices))


def extract_slices(
    cloud: PointCloud, plan: SlicePlan
) -> list[tuple[SliceSpec, PointCloud]]:
    """Replay the plan: per slice, the working-cloud points in its extended band.

    Cores are removed in construction order, so core membership stays unique
    while the overlap margins doubly cover each inter-slice seam.
    """
    if plan.original_size != len(cloud):
        raise PlanMismatchError(
            f"plan was built for {plan.original_size} points, cloud has {len(cloud)}"
        )
    out: list[tuple[SliceSpec, PointCloud]] = []
    working = cloud
    for spec in plan.slices:
        extended_points = extract_range(working, spec.extended)
        core_count = len(extract_range(working, spec.core))
        if core_count != spec.point_count:
            raise PlanMismatchError(
                f"slice {spec.index}: plan expects {spec.point_count} core points, "
                f"replay found {core_count}"
            )
        out.append((spec, extended_points))
        working = remove_range(working, spec.core)
    if len(working) != 0:
        raise PlanMismatchError(f"plan leaves {len(working)} points uncovered")
    return out


def plan_to_json(plan: SlicePlan) -> str:
    """Fixed-schema JSON; field names and order are part of the contract."""
    doc = {
        "theta": plan.config.theta,
        "threshold_frac": float(plan.config.threshold_frac),
        "overlap": plan.config.overlap,
        "original_size": plan.original_size,
        "slices": [
            {
                "index": s.index,
                "axis": s.side.axis.name,
                "sign": "+" if s.side.positive else "-",
                "core_lo": s.core.lo,
                "core_hi": s.core.hi,
                "ext_lo": s.extended.lo,
                "ext_hi": s.extended.hi,
                "points": s.point_count,
                "psi": s.psi,
                "terminal": s.terminal,
            }
            for s in plan.slices
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def plan_from_json(text: str) -> SlicePlan:
    doc = json.loads(text)
    try:
        config = SlicerConfig(
            theta=int(doc["theta"]),
            threshold_frac=doc["threshold_frac"],
            overlap=int(doc["overlap"]),
        )
        slices = []
        for s in doc["slices"]:
            axis = axis_from_name(s["axis"])
            side = Side(axis, +1 if s["sign"] == "+" else -1)
            slices.append(
                SliceSpec(
                    index=int(s["index"]),
                    side=side,
                    core=AxisRange(axis, int(s["core_lo"]), int(s["core_hi"])),
                    extended=AxisRange(axis, int(s["ext_lo"]), int(s["ext_hi"])),
                    point_count=int(s["points"]),
                    psi=float(s["psi"]),
                    terminal=bool(s["terminal"]),
                )
            )
        return SlicePlan(
            config=config,
            original_size=int(doc["original_size"]),
            slices=tuple(slices),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed plan JSON: {exc}") from exc
