import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import elastoflow as ef


def test_geometry_basics():
    geo = ef.GridGeometry(4, 3)
    assert geo.shape == (3, 4)
    assert geo.n_pixels == 12
    assert geo.spacing == 1.0


@pytest.mark.parametrize("w,h", [(1, 5), (5, 1), (0, 0), (-2, 4)])
def test_geometry_rejects_degenerate_grids(w, h):
    with pytest.raises(ValueError):
        ef.GridGeometry(w, h)


def test_geometry_rejects_bad_spacing():
    with pytest.raises(ValueError):
        ef.GridGeometry(4, 4, spacing=0.0)


def test_scalar_field_copies_and_locks():
    geo = ef.GridGeometry(3, 3)
    src = np.zeros((3, 3))
    f = ef.ScalarField(geo, src)
    src[0, 0] = 5.0
    assert f.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_scalar_field_accepts_flat_row_major():
    geo = ef.GridGeometry(3, 2)
    f = ef.ScalarField(geo, np.arange(6.0))
    assert f.values[1, 0] == 3.0


def test_scalar_field_rejects_nan_and_bad_shape():
    geo = ef.GridGeometry(3, 3)
    with pytest.raises(ValueError):
        ef.ScalarField(geo, np.full((3, 3), np.nan))
    with pytest.raises(ValueError):
        ef.ScalarField(geo, np.zeros((2, 3)))


def test_vector_field_constructors():
    geo = ef.GridGeometry(4, 2)
    z = ef.VectorField.zeros(geo)
    assert not z.u1.any() and not z.u2.any()
    c = ef.VectorField.constant(geo, 1.5, -2.0)
    assert np.all(c.u1 == 1.5) and np.all(c.u2 == -2.0)


def test_linear_combine_mixed_geometry_rejected():
    a = ef.VectorField.zeros(ef.GridGeometry(3, 3))
    b = ef.VectorField.zeros(ef.GridGeometry(4, 3))
    with pytest.raises(ValueError):
        ef.field_linear_combine(1.0, a, 1.0, b)


def test_norm_accounts_for_spacing():
    # ones on a 2x2 grid with h = 0.5: integral of |u|^2 = 4 * 2 * 0.25
    geo = ef.GridGeometry(2, 2, spacing=0.5)
    u = ef.VectorField.constant(geo, 1.0, 1.0)
    assert ef.field_norm_l2(u) == pytest.approx(np.sqrt(2.0), rel=1e-14)
    f = ef.ScalarField.filled(geo, 3.0)
    assert ef.scalar_norm_l2(f) == pytest.approx(np.sqrt(9.0 * 4 * 0.25), rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_linear_combine_matches_numpy(a, b, seed):
    rng = np.random.default_rng(seed)
    geo = ef.GridGeometry(5, 4)
    f = ef.VectorField(geo, rng.normal(size=(4, 5)), rng.normal(size=(4, 5)))
    g = ef.VectorField(geo, rng.normal(size=(4, 5)), rng.normal(size=(4, 5)))
    out = ef.field_linear_combine(a, f, b, g)
    np.testing.assert_allclose(out.u1, a * f.u1 + b * g.u1, atol=1e-12)
    np.testing.assert_allclose(out.u2, a * f.u2 + b * g.u2, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-10, 10, allow_nan=False), seed=st.integers(0, 2**16))
def test_norm_is_absolutely_homogeneous(c, seed):
    rng = np.random.default_rng(seed)
    geo = ef.GridGeometry(6, 3)
    u = ef.VectorField(geo, rng.normal(size=(3, 6)), rng.normal(size=(3, 6)))
    scaled = ef.field_linear_combine(c, u, 0.0, u)
    assert ef.field_norm_l2(scaled) == pytest.approx(abs(c) * ef.field_norm_l2(u),
                                                     rel=1e-10, abs=1e-12)
