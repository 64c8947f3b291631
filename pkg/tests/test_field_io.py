import struct

import numpy as np
import pytest

import elastoflow as ef
from conftest import speckle_image


def test_field_magic_is_frozen():
    assert ef.FIELD_MAGIC == b"EOFMFLD1"


def test_vector_field_file_layout(tmp_path):
    # freeze the on-disk layout: header then planar little-endian float32
    geo = ef.GridGeometry(3, 2)
    u1 = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    u2 = -u1
    path = tmp_path / "u.fld"
    ef.save_field(str(path), ef.VectorField(geo, u1, u2))
    blob = path.read_bytes()
    assert blob[:20] == struct.pack("<8sIII", b"EOFMFLD1", 3, 2, 2)
    payload = np.frombuffer(blob[20:], dtype="<f4")
    np.testing.assert_array_equal(payload[:6], u1.ravel().astype("<f4"))
    np.testing.assert_array_equal(payload[6:], u2.ravel().astype("<f4"))


def test_field_round_trip_scalar_and_vector(tmp_path):
    geo = ef.GridGeometry(6, 5)
    rng = np.random.default_rng(2)
    # float32-exact values survive the round trip bit for bit
    vals = (rng.integers(-512, 512, size=(5, 6)) / 256.0).astype(np.float64)
    s = ef.ScalarField(geo, vals)
    ef.save_field(str(tmp_path / "s.fld"), s)
    back = ef.load_field(str(tmp_path / "s.fld"))
    assert isinstance(back, ef.ScalarField)
    np.testing.assert_array_equal(back.values, vals)

    u = ef.VectorField(geo, vals, vals * 2)
    ef.save_field(str(tmp_path / "u.fld"), u)
    back = ef.load_field(str(tmp_path / "u.fld"))
    assert isinstance(back, ef.VectorField)
    assert back.geometry == geo
    np.testing.assert_array_equal(back.u2, vals * 2)


def test_load_field_rejects_bad_magic(tmp_path):
    geo = ef.GridGeometry(2, 2)
    path = tmp_path / "x.fld"
    ef.save_field(str(path), ef.VectorField.zeros(geo))
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="magic"):
        ef.load_field(str(path))


def test_load_field_rejects_truncated_payload(tmp_path):
    geo = ef.GridGeometry(4, 4)
    path = tmp_path / "x.fld"
    ef.save_field(str(path), ef.VectorField.zeros(geo))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ValueError):
        ef.load_field(str(path))


def test_png_16bit_round_trip(tmp_path):
    geo = ef.GridGeometry(9, 7)
    # values on the 16-bit lattice come back exactly
    rng = np.random.default_rng(3)
    vals = rng.integers(0, 65536, size=(7, 9)) / 65535.0
    path = tmp_path / "img.png"
    ef.save_image(str(path), ef.ScalarField(geo, vals))
    back = ef.load_image(str(path))
    np.testing.assert_allclose(back.values, vals, atol=1e-12)


def test_png_8bit_round_trip(tmp_path):
    geo = ef.GridGeometry(5, 5)
    vals = np.linspace(0, 1, 25).reshape(5, 5).round(2)
    path = tmp_path / "img8.png"
    ef.save_image(str(path), ef.ScalarField(geo, vals), maxval=255)
    back = ef.load_image(str(path))
    np.testing.assert_allclose(back.values, vals, atol=0.5 / 255)


def test_pgm_round_trip_both_depths(tmp_path):
    geo = ef.GridGeometry(6, 4)
    vals = np.random.default_rng(4).integers(0, 65536, size=(4, 6)) / 65535.0
    p16 = tmp_path / "img16.pgm"
    ef.save_image(str(p16), ef.ScalarField(geo, vals))
    np.testing.assert_allclose(ef.load_image(str(p16)).values, vals, atol=1e-12)

    p8 = tmp_path / "img8.pgm"
    ef.save_image(str(p8), ef.ScalarField(geo, vals), maxval=255)
    np.testing.assert_allclose(ef.load_image(str(p8)).values, vals, atol=0.5 / 255)


def test_pgm_parser_handles_comments_and_whitespace(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5 # comment\n# another comment\n 2 \t2\n255\n" + bytes([0, 85, 170, 255]))
    img = ef.load_image(str(path))
    np.testing.assert_allclose(img.values.ravel() * 255, [0, 85, 170, 255], atol=1e-9)


def test_save_image_requires_unit_range(tmp_path):
    geo = ef.GridGeometry(3, 3)
    f = ef.ScalarField(geo, np.full((3, 3), 1.5))
    with pytest.raises(ValueError):
        ef.save_image(str(tmp_path / "bad.png"), f)


def test_colormap_png_is_deterministic(tmp_path):
    img = speckle_image(ef.GridGeometry(12, 8), seed=6)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    ef.save_colormap_png(str(a), img, vmin=0.0, vmax=1.0)
    ef.save_colormap_png(str(b), img, vmin=0.0, vmax=1.0)
    blob = a.read_bytes()
    assert blob[:8] == b"\x89PNG\r\n\x1a\n"
    assert blob == b.read_bytes()
