"""On-disk formats.

Field files: 8-byte magic ``EOFMFLD1``, then width, height, and component
count as little-endian uint32, then the component planes as row-major
float32, little-endian. Scalar fields carry one plane, displacement fields
two (u1 then u2).

Images: 8- or 16-bit grayscale PNG and binary (P5) PGM are read, with values
rescaled to [0, 1] by the format's maximum value. ``save_colormap_png`` maps
a scalar field linearly onto the fixed viridis colormap (values at or below
``vmin`` get the first entry, at or above ``vmax`` the last) and writes an
8-bit RGB PNG.
"""

from __future__ import annotations

import os
import struct

import numpy as np
from PIL import Image

from .fields import GridGeometry, ScalarField, VectorField

__all__ = [
    "FIELD_MAGIC",
    "load_image",
    "save_image",
    "save_field",
    "load_field",
    "save_colormap_png",
]

FIELD_MAGIC = b"EOFMFLD1"
_HEADER = struct.Struct("<8sIII")


def _atomic_write(path: str, payload: bytes) -> None:
    """Write via a temp file and rename so a failure leaves no partial file."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def save_field(path: str, field: ScalarField | VectorField) -> None:
    """Serialize a field; see the module docstring for the layout."""
    if isinstance(field, VectorField):
        planes = [field.u1, field.u2]
    elif isinstance(field, ScalarField):
        planes = [field.values]
    else:
        raise TypeError(f"expected ScalarField or VectorField, got {type(field).__name__}")
    g = field.geometry
    blob = _HEADER.pack(FIELD_MAGIC, g.width, g.height, len(planes))
    blob += b"".join(np.ascontiguousarray(p, dtype="<f4").tobytes() for p in planes)
    _atomic_write(path, blob)


def load_field(path: str) -> ScalarField | VectorField:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, width, height, components = _HEADER.unpack(header)
        if magic != FIELD_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if components not in (1, 2):
            raise ValueError(f"{path}: unsupported component count {components}")
        count = width * height * components
        data = np.frombuffer(fh.read(4 * count + 4), dtype="<f4")
    if data.size != count:
        raise ValueError(f"{path}: expected {count} float32 values, found {data.size}")
    geometry = GridGeometry(int(width), int(height))
    planes = data.astype(np.float64).reshape(components, height, width)
    if components == 1:
        return ScalarField(geometry, planes[0])
    return VectorField(geometry, planes[0], planes[1])


def _read_pgm(path: str) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] != b"P5":
        raise ValueError(f"{path}: only binary (P5) PGM is supported")
    # header tokens may be separated by arbitrary whitespace and '#' comments
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(blob[start:pos]))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = tokens
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad maxval {maxval}")
    dtype = ">u2" if maxval > 255 else np.uint8
    raw = np.frombuffer(blob, dtype=dtype, count=width * height, offset=pos)
    return raw.reshape(height, width).astype(np.float64), maxval


def load_image(path: str) -> ScalarField:
    """Read a grayscale PNG or binary PGM, rescaled to [0, 1]."""
    if path.lower().endswith(".pgm"):
        arr, maxval = _read_pgm(path)
    else:
        with Image.open(path) as img:
            if img.mode == "L":
                maxval = 255
            elif img.mode in ("I;16", "I"):
                maxval = 65535
            else:
                raise ValueError(f"{path}: unsupported mode {img.mode!r}, expected grayscale")
            arr = np.asarray(img, dtype=np.float64)
    geometry = GridGeometry(arr.shape[1], arr.shape[0])
    return ScalarField(geometry, arr / maxval)


def save_image(path: str, image: ScalarField, *, maxval: int = 65535) -> None:
    """Quantize a [0, 1] scalar field to ``maxval`` levels and write PNG or PGM."""
    if not 0 < maxval < 65536:
        raise ValueError(f"bad maxval {maxval}")
    lo, hi = image.values.min(), image.values.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"image values must lie in [0, 1], got [{lo:g}, {hi:g}]")
    quant = np.rint(image.values * maxval)
    if path.lower().endswith(".pgm"):
        header = f"P5\n{image.geometry.width} {image.geometry.height}\n{maxval}\n".encode()
        dtype = ">u2" if maxval > 255 else np.uint8
        _atomic_write(path, header + quant.astype(dtype).tobytes())
        return
    if maxval > 255:
        Image.fromarray(quant.astype(np.uint16)).save(path)
    else:
        Image.fromarray(quant.astype(np.uint8), mode="L").save(path)


def save_colormap_png(path: str, field: ScalarField, vmin: float, vmax: float) -> None:
    """Render a scalar field through viridis into an 8-bit RGB PNG, clamping out-of-range values."""
    if not vmax > vmin:
        raise ValueError(f"vmax must exceed vmin, got [{vmin}, {vmax}]")
    from matplotlib import colormaps

    norm = np.clip((field.values - vmin) / (vmax - vmin), 0.0, 1.0)
    rgba = colormaps["viridis"](norm)
    rgb = np.rint(rgba[:, :, :3] * 255).astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path)
