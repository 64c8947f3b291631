import numpy as np
import pytest

import elastoflow as ef
from conftest import smooth_pair, speckle_image


def _ramp_pair(w=10, h=8, gx=0.003, gy=0.004):
    geo = ef.GridGeometry(w, h)
    ys, xs = np.indices(geo.shape)
    vals = 0.05 + gx * xs + gy * ys
    f = ef.ScalarField(geo, vals)
    return ef.ImagePair(f, f)


def test_pair_rejects_mismatched_geometry():
    a = speckle_image(ef.GridGeometry(5, 5))
    b = speckle_image(ef.GridGeometry(6, 5))
    with pytest.raises(ValueError):
        ef.ImagePair(a, b)


def test_pair_rejects_out_of_range_intensities():
    geo = ef.GridGeometry(4, 4)
    ok = ef.ScalarField.filled(geo, 0.5)
    with pytest.raises(ValueError):
        ef.ImagePair(ok, ef.ScalarField.filled(geo, 1.1))
    with pytest.raises(ValueError):
        ef.ImagePair(ef.ScalarField.filled(geo, -0.1), ok)


def test_spatial_gradient_exact_on_linear_ramp():
    # central differences (and the one-sided edge stencils) are exact on
    # affine images, so the ramp coefficients come back to the last bit
    gx, gy = ef.spatial_gradient(_ramp_pair())
    np.testing.assert_allclose(gx.values, 0.003, rtol=1e-12)
    np.testing.assert_allclose(gy.values, 0.004, rtol=1e-12)


def test_temporal_derivative_is_frame_difference():
    geo = ef.GridGeometry(5, 4)
    f0 = speckle_image(geo, seed=1)
    f1 = speckle_image(geo, seed=2)
    dt = ef.temporal_derivative(ef.ImagePair(f0, f1))
    np.testing.assert_array_equal(dt.values, f1.values - f0.values)


def test_warp_by_zero_is_identity():
    geo = ef.GridGeometry(7, 6)
    img = speckle_image(geo, seed=5)
    out = ef.warp_image(img, ef.VectorField.zeros(geo))
    np.testing.assert_array_equal(out.values, img.values)


def test_warp_integer_shift_samples_exact_pixels():
    geo = ef.GridGeometry(8, 6)
    img = speckle_image(geo, seed=9)
    out = ef.warp_image(img, ef.VectorField.constant(geo, 2.0, 1.0))
    # interior of the output equals the source shifted by (+2, +1)
    np.testing.assert_array_equal(out.values[:-1, :-2], img.values[1:, 2:])


def test_warp_clamps_at_the_border():
    geo = ef.GridGeometry(5, 5)
    img = speckle_image(geo, seed=4)
    out = ef.warp_image(img, ef.VectorField.constant(geo, 100.0, 0.0))
    np.testing.assert_array_equal(out.values, np.tile(img.values[:, -1:], (1, 5)))


def test_warp_convention_moves_features_backwards():
    # I1(x) = I0(x + u): a bright dot at c in frame 0 shows up at c - u
    geo = ef.GridGeometry(16, 16)
    vals = np.full(geo.shape, 0.1)
    vals[8, 8] = 1.0
    img = ef.ScalarField(geo, vals)
    out = ef.warp_image(img, ef.VectorField.constant(geo, 3.0, 2.0))
    assert out.values[6, 5] == 1.0
    assert out.values[8, 8] == pytest.approx(0.1)


def test_sample_bilinear_hand_example():
    geo = ef.GridGeometry(3, 2)
    u = ef.VectorField(geo, np.array([[0., 2., 4.], [6., 8., 10.]]),
                       np.zeros((2, 3)))
    got = ef.sample_bilinear(u, np.array([[0.5, 0.5]]))
    # average of the four corners 0, 2, 6, 8
    assert got[0, 0] == pytest.approx(4.0)
    assert got[0, 1] == 0.0


def test_sample_bilinear_reproduces_affine_fields():
    geo = ef.GridGeometry(9, 7)
    ys, xs = np.indices(geo.shape)
    u = ef.VectorField(geo, 1.0 + 0.5 * xs - 0.25 * ys, -2.0 + 0.1 * xs + 0.3 * ys)
    rng = np.random.default_rng(11)
    pts = np.column_stack([rng.uniform(0, 8, 40), rng.uniform(0, 6, 40)])
    got = ef.sample_bilinear(u, pts)
    np.testing.assert_allclose(got[:, 0], 1.0 + 0.5 * pts[:, 0] - 0.25 * pts[:, 1],
                               rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(got[:, 1], -2.0 + 0.1 * pts[:, 0] + 0.3 * pts[:, 1],
                               rtol=1e-12, atol=1e-12)


def test_smooth_pair_builder_round_trips_the_motion():
    # warping frame 0 by the same constant field reproduces frame 1 bitwise
    pair = smooth_pair(motion=(0.4, -0.6))
    geo = pair.geometry
    rebuilt = ef.warp_image(pair.frame0, ef.VectorField.constant(geo, 0.4, -0.6))
    np.testing.assert_array_equal(rebuilt.values, pair.frame1.values)
