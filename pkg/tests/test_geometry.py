import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.errors import DataError
from gazekit.geometry import (
    CameraIntrinsics,
    CropRect,
    DepthMap,
    EyeFrame,
    PointCloud,
    build_eye_frame,
    crop_intrinsics,
    median_depth_3x3,
    project,
    to_eye_frame,
    unproject,
    unproject_pixel,
)

K_SMALL = CameraIntrinsics(focal_px=100.0, width=200, height=100)


def make_depth(values):
    return DepthMap.from_array(np.asarray(values, dtype=float))


def intrinsics_matrix(k):
    return np.array([[k.focal_px, 0, k.principal_x], [0, k.focal_px, k.principal_y], [0, 0, 1]])


finite_depth = st.floats(min_value=0.2, max_value=50.0, allow_nan=False)


class TestIntrinsics:
    def test_principal_defaults_to_center(self):
        assert K_SMALL.principal_x == 100.0
        assert K_SMALL.principal_y == 50.0

    def test_explicit_principal_kept(self):
        k = CameraIntrinsics(50.0, 10, 10, 1.5, 2.5)
        assert (k.principal_x, k.principal_y) == (1.5, 2.5)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_focal_must_be_positive(self, bad):
        with pytest.raises(DataError):
            CameraIntrinsics(bad, 10, 10)

    def test_size_must_be_positive(self):
        with pytest.raises(DataError):
            CameraIntrinsics(10.0, 0, 10)


class TestDepthMap:
    def test_from_array_masks_nan_and_nonpositive(self):
        d = make_depth([[1.0, np.nan], [0.0, -2.0]])
        assert d.valid.tolist() == [[True, False], [False, False]]

    def test_valid_pixels_must_be_positive_finite(self):
        with pytest.raises(DataError):
            DepthMap(np.array([[-1.0]]), np.array([[True]]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            DepthMap(np.ones((2, 2)), np.ones((2, 3), dtype=bool))


class TestUnproject:
    def test_principal_point_ray(self):
        depth = make_depth(np.full((100, 200), np.nan))
        depth.values[50, 100] = 5.0
        depth.valid[50, 100] = True
        cloud = unproject(DepthMap(depth.values, depth.valid), K_SMALL)
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.point_at(100, 50), [0.0, 0.0, 5.0])

    def test_off_center_pixel_matches_matrix_inverse_oracle(self):
        # oracle: numerically invert the 3x3 intrinsics matrix
        k_inv = np.linalg.inv(intrinsics_matrix(K_SMALL))
        z = 2.0
        expect = k_inv @ np.array([150 * z, 75 * z, z])
        np.testing.assert_allclose(expect, [1.0, 0.5, 2.0], atol=1e-12)

        depth = np.full((100, 200), np.nan)
        depth[75, 150] = z
        cloud = unproject(make_depth(depth), K_SMALL)
        np.testing.assert_allclose(cloud.point_at(150, 75), expect, atol=1e-12)

    def test_all_invalid_gives_empty_cloud(self):
        cloud = unproject(make_depth(np.full((100, 200), np.nan)), K_SMALL)
        assert len(cloud) == 0
        assert np.all(cloud.index_grid == -1)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DataError):
            unproject(make_depth(np.ones((4, 4))), K_SMALL)

    def test_points_ordered_row_major(self):
        cloud = unproject(make_depth(np.ones((3, 3))), CameraIntrinsics(10.0, 3, 3))
        assert cloud.pixels[:4].tolist() == [[0, 0], [1, 0], [2, 0], [0, 1]]

    def test_index_grid_consistent(self):
        depth = np.ones((5, 4))
        depth[2, 1] = np.nan
        cloud = unproject(make_depth(depth), CameraIntrinsics(7.0, 4, 5))
        assert cloud.point_at(1, 2) is None
        for i, (x, y) in enumerate(cloud.pixels):
            assert cloud.index_grid[y, x] == i


class TestProject:
    def test_principal_ray(self):
        assert project([0, 0, 5], K_SMALL) == (100.0, 50.0)

    def test_forward_formula(self):
        assert project([1.0, 0.5, 2.0], K_SMALL) == (150.0, 75.0)

    def test_behind_camera_rejected(self):
        with pytest.raises(DataError):
            project([0, 0, -1.0], K_SMALL)

    @settings(max_examples=50, deadline=None)
    @given(
        f=st.floats(min_value=20.0, max_value=2000.0),
        w=st.integers(min_value=2, max_value=64),
        h=st.integers(min_value=2, max_value=64),
        data=st.data(),
    )
    def test_roundtrip_identity(self, f, w, h, data):
        depth = data.draw(
            st.lists(finite_depth, min_size=w * h, max_size=w * h).map(
                lambda v: np.array(v).reshape(h, w)
            )
        )
        k = CameraIntrinsics(f, w, h)
        cloud = unproject(make_depth(depth), k)
        for i, (x, y) in enumerate(cloud.pixels):
            px, py = project(cloud.points[i], k)
            assert abs(px - x) < 1e-9 and abs(py - y) < 1e-9


class TestEyeFrame:
    def test_on_axis_eye_aligns_with_camera(self):
        frame = build_eye_frame([0, 0, 5.0])
        np.testing.assert_allclose(frame.ex, [1, 0, 0])
        np.testing.assert_allclose(frame.ey, [0, 1, 0])
        np.testing.assert_allclose(frame.ez, [0, 0, 1])

    def test_off_axis_eye_cross_product_oracle(self):
        frame = build_eye_frame([3.0, 0.0, 4.0])
        np.testing.assert_allclose(frame.ez, [0.6, 0.0, 0.8], atol=1e-12)
        # oracle: rebuild ex/ey from raw cross products
        ex = np.cross([0, 1, 0], frame.ez)
        ex = ex / np.linalg.norm(ex)
        np.testing.assert_allclose(frame.ex, ex, atol=1e-12)
        np.testing.assert_allclose(frame.ey, np.cross(frame.ez, frame.ex), atol=1e-12)

    def test_degenerate_down_axis_fallback(self):
        frame = build_eye_frame([0.0, 1.0, 0.0])
        np.testing.assert_allclose(frame.ex, [1, 0, 0])

    def test_zero_eye_rejected(self):
        with pytest.raises(DataError):
            build_eye_frame([0.0, 0.0, 0.0])

    def test_invalid_basis_rejected(self):
        with pytest.raises(DataError):
            EyeFrame(origin=[0, 0, 1], ex=[1, 0, 0], ey=[1, 0, 0], ez=[0, 0, 1])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=-10, max_value=10), min_size=3, max_size=3))
    def test_basis_orthonormal_right_handed(self, eye):
        if np.linalg.norm(eye) < 1e-6:
            eye = [0.0, 0.0, 1.0]
        frame = build_eye_frame(eye)
        r = frame.rotation()
        np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(np.cross(frame.ex, frame.ey), frame.ez, atol=1e-9)


class TestToEyeFrame:
    def make_cloud(self, points):
        points = np.asarray(points, float)
        n = len(points)
        pixels = np.stack([np.arange(n), np.zeros(n, int)], axis=1)
        grid = np.full((1, n), -1, dtype=np.int64)
        grid[0, :] = np.arange(n)
        return PointCloud(points, pixels, grid, frame="camera")

    def test_origin_maps_to_zero(self):
        frame = build_eye_frame([1.0, 2.0, 3.0])
        out = to_eye_frame(self.make_cloud([[1.0, 2.0, 3.0]]), frame)
        np.testing.assert_allclose(out.points[0], [0, 0, 0], atol=1e-12)
        assert out.frame == "eye"

    def test_point_beyond_eye_lands_on_positive_ez(self):
        frame = build_eye_frame([0, 0, 5.0])
        out = to_eye_frame(self.make_cloud([[0, 0, 7.0]]), frame)
        np.testing.assert_allclose(out.points[0], [0, 0, 2.0], atol=1e-12)

    def test_eye_frame_cloud_rejected(self):
        frame = build_eye_frame([0, 0, 5.0])
        out = to_eye_frame(self.make_cloud([[0, 0, 7.0]]), frame)
        with pytest.raises(DataError):
            to_eye_frame(out, frame)

    @settings(max_examples=100, deadline=None)
    @given(
        eye=st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=3),
        pts=st.lists(
            st.lists(st.floats(min_value=-20, max_value=20), min_size=2, max_size=2),
            min_size=1,
            max_size=8,
        ),
        zs=st.lists(finite_depth, min_size=8, max_size=8),
    )
    def test_roundtrip_oracle_and_isometry(self, eye, pts, zs):
        if np.linalg.norm(eye) < 1e-6:
            eye = [0.0, 0.0, 1.0]
        points = np.array([[x, y, zs[i]] for i, (x, y) in enumerate(pts)])
        frame = build_eye_frame(eye)
        out = to_eye_frame(self.make_cloud(points), frame)
        # independent inverse: origin + sum of coords * basis
        back = (
            frame.origin
            + out.points[:, :1] * frame.ex
            + out.points[:, 1:2] * frame.ey
            + out.points[:, 2:3] * frame.ez
        )
        np.testing.assert_allclose(back, points, atol=1e-9)
        # isometry: pairwise distances preserved
        d_in = np.linalg.norm(points[:, None] - points[None], axis=-1)
        d_out = np.linalg.norm(out.points[:, None] - out.points[None], axis=-1)
        np.testing.assert_allclose(d_in, d_out, atol=1e-9)


class TestCropIntrinsics:
    def test_full_image_consistent_is_identity(self):
        out = crop_intrinsics(K_SMALL, CropRect(0, 0, 200, 100), "consistent")
        assert out == K_SMALL

    def test_consistent_shifts_principal(self):
        out = crop_intrinsics(K_SMALL, CropRect(10, 20, 100, 60), "consistent")
        assert (out.principal_x, out.principal_y) == (90.0, 30.0)
        assert out.focal_px == K_SMALL.focal_px

    def test_recentered_principal_at_crop_center(self):
        out = crop_intrinsics(K_SMALL, CropRect(10, 20, 100, 60), "recentered", recentered_focal=80.0)
        assert (out.principal_x, out.principal_y) == (50.0, 30.0)
        assert out.focal_px == 80.0

    def test_out_of_bounds_crop_rejected(self):
        with pytest.raises(DataError):
            crop_intrinsics(K_SMALL, CropRect(150, 0, 100, 50), "consistent")

    def test_unknown_mode_rejected(self):
        with pytest.raises(DataError):
            crop_intrinsics(K_SMALL, CropRect(0, 0, 10, 10), "weird")

    @settings(max_examples=50, deadline=None)
    @given(
        x0=st.integers(min_value=0, max_value=100),
        y0=st.integers(min_value=0, max_value=40),
        data=st.data(),
    )
    def test_consistent_mode_preserves_unprojection(self, x0, y0, data):
        w = data.draw(st.integers(min_value=2, max_value=200 - x0))
        h = data.draw(st.integers(min_value=2, max_value=100 - y0))
        crop = CropRect(x0, y0, w, h)
        k_crop = crop_intrinsics(K_SMALL, crop, "consistent")
        x = data.draw(st.integers(min_value=x0, max_value=x0 + w - 1))
        y = data.draw(st.integers(min_value=y0, max_value=y0 + h - 1))
        z = data.draw(finite_depth)
        full = unproject_pixel(K_SMALL, x, y, z)
        cropped = unproject_pixel(k_crop, x - x0, y - y0, z)
        np.testing.assert_allclose(full, cropped, atol=1e-9)


class TestMedianDepth:
    def test_median_over_valid_window(self):
        d = make_depth([[1.0, 2.0, np.nan], [3.0, 4.0, 5.0], [6.0, 7.0, 8.0]])
        assert median_depth_3x3(d, 1, 1) == 4.5  # median of 8 valid values

    def test_window_clipped_at_border(self):
        d = make_depth([[1.0, 2.0], [3.0, 40.0]])
        assert median_depth_3x3(d, 0, 0) == 2.5

    def test_all_invalid_window_rejected(self):
        d = make_depth(np.full((3, 3), np.nan))
        with pytest.raises(DataError):
            median_depth_3x3(d, 1, 1)
