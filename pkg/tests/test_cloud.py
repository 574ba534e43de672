import numpy as np
import pytest

from sliceseg import AxisRange, PointCloud, extract_range, remove_range
from sliceseg.cloud import Axis, Side, SIDES

from conftest import cube_cloud, make_cloud, random_cloud


def test_dedup_keeps_first_and_counts():
    cloud = PointCloud(
        np.array([[1, 2, 3], [4, 5, 6], [1, 2, 3]]),
        colors=np.array([[10, 0, 0], [0, 20, 0], [0, 0, 30]], dtype=np.uint8),
    )
    assert len(cloud) == 2
    assert cloud.duplicates_merged == 1
    assert cloud.colors[0].tolist() == [10, 0, 0]


def test_bit_depth_auto_selection():
    assert make_cloud([(1, 2, 3)]).bit_depth == 10
    assert make_cloud([(1023, 0, 0)]).bit_depth == 10
    assert make_cloud([(1024, 0, 0)]).bit_depth == 11
    assert make_cloud([(65535, 0, 0)]).bit_depth == 16


def test_explicit_bit_depth_validates():
    with pytest.raises(ValueError):
        make_cloud([(300, 0, 0)], bit_depth=8)
    with pytest.raises(ValueError):
        make_cloud([(0, 0, 0)], bit_depth=17)
    assert make_cloud([(200, 0, 0)], bit_depth=8).bit_depth == 8


def test_negative_coordinates_rejected():
    with pytest.raises(ValueError):
        make_cloud([(-1, 0, 0)])


def test_bbox_is_tight():
    cloud = make_cloud([(1, 5, 2), (7, 5, 9), (3, 6, 2)])
    mins, maxs = cloud.bbox
    assert mins.tolist() == [1, 5, 2]
    assert maxs.tolist() == [7, 6, 9]
    # shrinking any face by one voxel excludes at least one point
    for axis in Axis:
        assert (cloud.coords[:, axis] == mins[axis]).any()
        assert (cloud.coords[:, axis] == maxs[axis]).any()


def test_axis_range_validation():
    with pytest.raises(ValueError):
        AxisRange(Axis.X, 5, 5)
    with pytest.raises(ValueError):
        AxisRange(Axis.X, -1, 4)
    assert AxisRange(Axis.Z, 2, 6).width == 4


def test_side_enumeration():
    assert len(SIDES) == 6
    assert [str(s) for s in SIDES] == ["+X", "-X", "+Y", "-Y", "+Z", "-Z"]
    with pytest.raises(ValueError):
        Side(Axis.X, 0)


def test_extract_range_half_open_semantics():
    cube = cube_cloud()
    low = extract_range(cube, AxisRange(Axis.Z, 0, 1))
    assert sorted(low.point_set()) == [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0)]
    assert len(extract_range(cube, AxisRange(Axis.Z, 0, 2))) == 8
    assert len(extract_range(cube, AxisRange(Axis.Z, 5, 6))) == 0


def test_remove_range_complement():
    cube = cube_cloud()
    high = remove_range(cube, AxisRange(Axis.Z, 0, 1))
    assert sorted(high.point_set()) == [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1)]
    assert len(remove_range(cube, AxisRange(Axis.X, 5, 9))) == 8
    assert len(remove_range(cube, AxisRange(Axis.X, 0, 2))) == 0


def test_extract_remove_partition_property(rng):
    for _ in range(25):
        cloud = random_cloud(rng, max_points=200)
        axis = Axis(int(rng.integers(0, 3)))
        lo = int(rng.integers(0, 30))
        hi = lo + int(rng.integers(1, 20))
        r = AxisRange(axis, lo, hi)
        inside, outside = extract_range(cloud, r), remove_range(cloud, r)
        assert len(inside) + len(outside) == len(cloud)
        assert inside.point_set() | outside.point_set() == cloud.point_set()
        assert not (inside.point_set() & outside.point_set())


def test_cloud_is_immutable():
    cloud = cube_cloud()
    with pytest.raises(ValueError):
        cloud.coords[0, 0] = 9


def test_translate_preserves_structure():
    cloud = make_cloud([(1, 2, 3), (4, 5, 6)])
    moved = cloud.translate((10, 0, 2))
    assert moved.point_set() == {(11, 2, 5), (14, 5, 8)}
    with pytest.raises(ValueError):
        cloud.translate((-2, 0, 0))
