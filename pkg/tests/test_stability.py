import numpy as np
import pytest

from gazekit.errors import DataError
from gazekit.geometry import CameraIntrinsics, CropRect
from gazekit.stability import (
    ImageSpec,
    PlaneScene,
    SyntheticDepthProvider,
    StabilityConfig,
    gaze_vector_for_crop,
    sample_crops,
    stability,
)

SLANTED = PlaneScene(normal=(0.19611613513818404, 0.0980580675690920, 0.9756382561962222), offset=6.0)


def make_spec(image_id="img0", shift_scale=0.0, scene=SLANTED, seed=0):
    provider = SyntheticDepthProvider(160, 120, 140.0, scene, shift_scale=shift_scale, seed=seed)
    return ImageSpec(image_id, 160, 120, eye_px=(70, 50), gaze_px=(110, 80), provider=provider)


class TestSampleCrops:
    def test_full_fraction_returns_full_image(self):
        crops = sample_crops(64, 48, 1, min_area_fraction=1.0, seed=123)
        assert crops == [CropRect(0, 0, 64, 48)]

    def test_deterministic_given_seed(self):
        a = sample_crops(200, 150, 5, contain=[(50, 50), (120, 90)], seed=42)
        b = sample_crops(200, 150, 5, contain=[(50, 50), (120, 90)], seed=42)
        assert a == b
        c = sample_crops(200, 150, 5, contain=[(50, 50), (120, 90)], seed=43)
        assert a != c

    def test_crops_contain_anchors_and_area(self):
        anchors = [(10, 10), (150, 100)]
        crops = sample_crops(200, 150, 20, min_area_fraction=0.25, contain=anchors, seed=7)
        for crop in crops:
            assert all(crop.contains_pixel(*a) for a in anchors)
            assert crop.width * crop.height >= 0.25 * 200 * 150

    def test_anchor_outside_image_rejected(self):
        with pytest.raises(DataError):
            sample_crops(64, 48, 1, contain=[(64, 0)], seed=0)

    def test_unsatisfiable_constraints_raise(self):
        # anchors at opposite corners but crops limited to a quarter of the area
        with pytest.raises(DataError):
            sample_crops(100, 100, 1, min_area_fraction=0.25, contain=[(0, 0), (99, 99)], seed=0, max_tries=50)


class TestGazeVectorForCrop:
    def test_consistent_mode_crop_invariant(self):
        spec = make_spec()
        full = CropRect(0, 0, 160, 120)
        sub = CropRect(30, 20, 110, 90)
        v_full = gaze_vector_for_crop(full, spec.provider, spec.eye_px, spec.gaze_px, "consistent")
        v_sub = gaze_vector_for_crop(sub, spec.provider, spec.eye_px, spec.gaze_px, "consistent")
        assert np.linalg.norm(v_full) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(v_full, v_sub, atol=1e-9)

    def test_shift_error_breaks_invariance(self):
        spec = make_spec(shift_scale=5e-3)
        full = CropRect(0, 0, 160, 120)
        sub = CropRect(30, 20, 110, 90)
        v_full = gaze_vector_for_crop(full, spec.provider, spec.eye_px, spec.gaze_px, "consistent")
        v_sub = gaze_vector_for_crop(sub, spec.provider, spec.eye_px, spec.gaze_px, "consistent")
        assert np.linalg.norm(v_full - v_sub) > 0

    def test_anchor_outside_crop_rejected(self):
        spec = make_spec()
        with pytest.raises(DataError):
            gaze_vector_for_crop(CropRect(100, 60, 60, 60), spec.provider, spec.eye_px, spec.gaze_px)

    def test_coincident_anchors_rejected(self):
        spec = make_spec()
        with pytest.raises(DataError):
            gaze_vector_for_crop(
                CropRect(0, 0, 160, 120), spec.provider, spec.eye_px, spec.eye_px
            )


class TestStability:
    def test_null_case_consistent_exact_depth(self):
        result = stability([make_spec(f"img{i}") for i in range(3)], "consistent", seed=11)
        assert np.all(result.median_std < 1e-9)
        assert result.n_images_used == 3

    def test_single_crop_zero_std(self):
        result = stability([make_spec()], "consistent", seed=0, config=StabilityConfig(n_crops=1))
        np.testing.assert_array_equal(result.per_image[0].std, np.zeros(3))

    def test_recentered_mode_spreads_on_slanted_scene(self):
        result = stability([make_spec()], "recentered", seed=3)
        assert np.any(result.median_std > 1e-6)

    def test_monotone_in_shift_magnitude(self):
        # from the exact-depth baseline (zero spread), larger inverse-depth
        # shifts must strictly increase the spread
        levels = [1e-3, 4e-3, 1.6e-2]
        medians = []
        for scale in levels:
            specs = [make_spec(f"img{i}", shift_scale=scale, seed=100 + i) for i in range(4)]
            medians.append(stability(specs, "consistent", seed=5).median_std)
        total = [float(np.linalg.norm(m)) for m in medians]
        assert total[0] < total[1] < total[2]
        assert all(t > 0 for t in total)

    def test_shift_noise_spreads_recentered_mode(self):
        for scale in [1e-3, 1e-2]:
            specs = [make_spec(f"img{i}", shift_scale=scale, seed=100 + i) for i in range(4)]
            result = stability(specs, "recentered", seed=5)
            assert float(np.linalg.norm(result.median_std)) > 0

    def test_crop_order_invariance_of_std(self):
        spec = make_spec(shift_scale=2e-3)
        crops = sample_crops(160, 120, 5, contain=[spec.eye_px, spec.gaze_px], seed=9)
        vecs = [
            gaze_vector_for_crop(c, spec.provider, spec.eye_px, spec.gaze_px, "consistent")
            for c in crops
        ]
        fwd = np.std(np.stack(vecs), axis=0, ddof=0)
        rev = np.std(np.stack(vecs[::-1]), axis=0, ddof=0)
        np.testing.assert_allclose(fwd, rev, atol=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            stability([], "consistent")

    def test_json_shape(self):
        result = stability([make_spec()], "consistent", seed=1)
        obj = result.to_json_obj()
        assert set(obj) == {"median_std", "n_images_used", "n_images_excluded", "per_image"}
        assert len(obj["per_image"][0]["std"]) == 3
