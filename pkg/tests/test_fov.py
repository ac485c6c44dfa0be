import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.errors import DataError
from gazekit.fov import (
    DECAY_RATE,
    DECAY_THRESHOLD,
    FovField,
    GazeVector,
    cone2d_heatmap,
    cosine_field,
    cosine_points,
    fov_decay,
    fov_heatmap,
    fov_jacobian,
    fov_point_jacobian,
    fov_point_values,
)
from gazekit.geometry import CameraIntrinsics, DepthMap, build_eye_frame, to_eye_frame, unproject

mpmath.mp.dps = 40

rng = np.random.default_rng(7)


def random_unit(r):
    v = r.normal(size=3)
    return v / np.linalg.norm(v)


def eye_cloud_from_depth(depth_grid, focal=40.0, eye=(0.3, -0.2, 1.0)):
    h, w = depth_grid.shape
    cloud = unproject(DepthMap.from_array(depth_grid), CameraIntrinsics(focal, w, h))
    return to_eye_frame(cloud, build_eye_frame(eye))


class TestGazeVector:
    def test_accepts_unit(self):
        GazeVector([0.0, 0.0, 1.0])

    def test_rejects_non_unit(self):
        with pytest.raises(DataError):
            GazeVector([0.0, 0.0, 1.1])


class TestCosine:
    def test_aligned_point(self):
        np.testing.assert_allclose(cosine_points([[0, 0, 2.0]], [0, 0, 1.0]), [1.0])

    def test_orthogonal_point(self):
        np.testing.assert_allclose(cosine_points([[0, 0, 2.0]], [1.0, 0, 0]), [0.0])

    def test_oblique_point_dot_oracle(self):
        p = np.array([1.0, 1.0, np.sqrt(2.0)])
        want = float(np.dot(p / np.linalg.norm(p), [0, 0, 1.0]))
        assert want == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
        np.testing.assert_allclose(cosine_points([p], [0, 0, 1.0]), [want], atol=1e-12)

    def test_point_at_eye_is_nan(self):
        out = cosine_points([[0.0, 0.0, 0.0]], [0, 0, 1.0])
        assert np.isnan(out[0])

    def test_camera_frame_cloud_rejected(self):
        cloud = unproject(DepthMap.from_array(np.ones((2, 2))), CameraIntrinsics(5.0, 2, 2))
        with pytest.raises(DataError):
            cosine_field(cloud, [0, 0, 1.0])

    def test_non_unit_gaze_rejected(self):
        with pytest.raises(DataError):
            cosine_points([[0, 0, 1.0]], [0, 0, 0.9])


class TestDecay:
    def test_top_branch_is_identity(self):
        assert fov_decay(0.95) == 0.95

    def test_unit_cosine_maps_to_one(self):
        assert fov_decay(1.0) == 1.0

    def test_branches_agree_at_threshold(self):
        top = DECAY_THRESHOLD
        bottom = fov_decay(DECAY_THRESHOLD)  # 0.9 goes through the decay branch
        assert abs(top - bottom) < 1e-12

    def test_zero_cosine_high_precision_oracle(self):
        want = float(mpmath.mpf("0.9") * mpmath.exp(-mpmath.mpf("4.5")))
        assert abs(fov_decay(0.0) - want) < 1e-12
        assert fov_decay(0.0) == pytest.approx(9.998096884418074e-3, abs=1e-12)

    def test_strictly_increasing_on_dense_grid(self):
        c = np.linspace(-1.0, 1.0, 20001)
        v = fov_decay(c)
        assert np.all(np.diff(v) > 0)

    def test_range(self):
        c = np.linspace(-1.0, 1.0, 4001)
        v = fov_decay(c)
        assert np.all(v > 0) and np.all(v <= 1.0)


class TestFovHeatmap:
    def test_invalid_pixels_zero_and_masked(self):
        grid = np.array([[1.0, np.nan], [0.0, 0.95]])
        field = fov_heatmap(grid)
        assert field.values[0, 1] == 0.0 and not field.valid[0, 1]
        assert field.values[0, 0] == 1.0 and field.values[1, 1] == 0.95

    def test_out_of_range_cosines_rejected(self):
        with pytest.raises(DataError):
            fov_heatmap(np.array([[1.5]]))

    def test_rotation_equivariance(self):
        pts = rng.normal(size=(40, 3)) + [0, 0, 4.0]
        g = random_unit(rng)
        theta = 0.7
        rot = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0],
                [np.sin(theta), np.cos(theta), 0],
                [0, 0, 1.0],
            ]
        )
        v0 = fov_point_values(pts, g)
        v1 = fov_point_values(pts @ rot.T, rot @ g)
        np.testing.assert_allclose(v0, v1, atol=1e-9)


class TestJacobian:
    def finite_difference(self, pts, g, h=1e-5):
        out = np.zeros((len(pts), 3))
        for j in range(3):
            gp = np.array(g, float)
            gm = np.array(g, float)
            gp[j] += h
            gm[j] -= h
            # bypass the unit check: evaluate the raw decay of the raw dot product
            up = pts / np.linalg.norm(pts, axis=1, keepdims=True)
            out[:, j] = (fov_decay(up @ gp) - fov_decay(up @ gm)) / (2 * h)
        return out

    def test_top_branch_gradient_is_unit_direction(self):
        p = np.array([[0.0, 0.0, 3.0]])
        jac = fov_point_jacobian(p, [0, 0, 1.0])
        np.testing.assert_allclose(jac, [[0, 0, 1.0]], atol=1e-12)

    def test_bottom_branch_at_zero_cosine(self):
        p = np.array([[2.0, 0.0, 0.0]])
        jac = fov_point_jacobian(p, [0, 0, 1.0])
        want = DECAY_RATE * fov_decay(0.0)  # 5 * V * u with u = (1,0,0)
        np.testing.assert_allclose(jac, [[want, 0, 0]], atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_matches_central_differences(self, seed):
        r = np.random.default_rng(seed)
        pts = r.normal(size=(20, 3)) * 2.0 + [0, 0, 5.0]
        g = random_unit(r)
        up = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        c = up @ g
        keep = np.abs(c - DECAY_THRESHOLD) > 1e-3  # stay away from the kink
        jac = fov_point_jacobian(pts, g)[keep]
        fd = self.finite_difference(pts, g)[keep]
        denom = np.maximum(np.abs(fd), 1e-6)
        assert np.max(np.abs(jac - fd) / denom) < 1e-4

    def test_grid_wrapper_places_values(self):
        cloud = eye_cloud_from_depth(np.full((3, 4), 2.0))
        jac = fov_jacobian(cloud, [0, 0, 1.0])
        assert jac.shape == (3, 4, 3)
        flat = fov_point_jacobian(cloud.points, [0, 0, 1.0])
        np.testing.assert_array_equal(jac[cloud.pixels[:, 1], cloud.pixels[:, 0]], flat)


class TestCone2d:
    def test_along_direction(self):
        field = cone2d_heatmap((0, 2), [1.0, 0.0], 5, 5)
        assert field.values[2, 4] == 1.0

    def test_perpendicular(self):
        field = cone2d_heatmap((0, 2), [1.0, 0.0], 5, 5)
        assert field.values[0, 0] == 0.0  # behind/perpendicular clamps to zero
        assert field.values[4, 0] == 0.0

    def test_sixty_degrees(self):
        # pixel offset (1, sqrt(3)) sits at 60 degrees from (1, 0)
        field = cone2d_heatmap((0.0, 0.0), [1.0, 0.0], 8, 8)
        xs = np.arange(8) - 0.0
        offset = np.array([1.0, np.sqrt(3.0)])
        want = float(offset @ [1.0, 0.0] / np.linalg.norm(offset))
        assert want == pytest.approx(0.5, abs=1e-12)
        # nearest representable pixel has integer coords; use an exact 60-degree pair
        field2 = cone2d_heatmap((0.0, 0.0), [0.5, np.sqrt(3.0) / 2], 4, 4)
        assert field2.values[0, 1] == pytest.approx(0.5, abs=1e-12)

    def test_head_pixel_is_zero(self):
        field = cone2d_heatmap((2, 2), [1.0, 0.0], 5, 5)
        assert field.values[2, 2] == 0.0

    def test_head_outside_image_rejected(self):
        with pytest.raises(DataError):
            cone2d_heatmap((9, 0), [1.0, 0.0], 5, 5)

    def test_rescale_invariance(self):
        g = np.array([0.6, 0.8])
        small = cone2d_heatmap((1, 2), g, 6, 6)
        big = cone2d_heatmap((3, 6), g, 18, 18)
        np.testing.assert_allclose(big.values[::3, ::3], small.values, atol=1e-12)


class TestFovFieldType:
    def test_rejects_out_of_range(self):
        with pytest.raises(DataError):
            FovField(np.array([[1.5]]), np.array([[True]]))

    def test_zeroes_invalid(self):
        f = FovField(np.array([[0.5, 0.7]]), np.array([[True, False]]))
        assert f.values[0, 1] == 0.0
