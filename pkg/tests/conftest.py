"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

import elastoflow as ef


def speckle_image(geometry: ef.GridGeometry, seed: int = 0, blur: float = 1.2,
                  lo: float = 0.1, hi: float = 0.9) -> ef.ScalarField:
    """Random smooth texture in [lo, hi]; plenty of gradient everywhere."""
    rng = np.random.default_rng(seed)
    raw = gaussian_filter(rng.random(geometry.shape), blur)
    raw = (raw - raw.min()) / (raw.max() - raw.min())
    return ef.ScalarField(geometry, lo + (hi - lo) * raw)


def smooth_pair(width: int = 12, height: int = 10, seed: int = 0,
                motion: tuple[float, float] = (0.3, -0.2)) -> ef.ImagePair:
    """Small pair where frame 1 is frame 0 warped by a constant field."""
    geo = ef.GridGeometry(width, height)
    f0 = speckle_image(geo, seed=seed)
    u = ef.VectorField.constant(geo, *motion)
    return ef.ImagePair(f0, ef.warp_image(f0, u))


def translated_pair(width: int, height: int, shift: tuple[int, int],
                    seed: int = 3, blur: float = 1.5) -> ef.ImagePair:
    """Exact integer translation: both frames are crops of one larger texture.

    frame1(x) = frame0(x + shift) holds at every pixel, with real content
    flowing in from outside the crop instead of clamped edges.
    """
    sx, sy = shift
    pad = max(abs(sx), abs(sy))
    big_geo = ef.GridGeometry(width + 2 * pad, height + 2 * pad)
    big = speckle_image(big_geo, seed=seed, blur=blur).values
    geo = ef.GridGeometry(width, height)
    f0 = big[pad:pad + height, pad:pad + width]
    f1 = big[pad + sy:pad + sy + height, pad + sx:pad + sx + width]
    return ef.ImagePair(ef.ScalarField(geo, f0), ef.ScalarField(geo, f1))


@pytest.fixture(scope="session")
def default_phantom():
    """The full-size phantom every end-to-end check shares (one truth solve)."""
    spec = ef.PhantomSpec()
    pair, truth, seeded = ef.generate_phantom(spec)
    return spec, pair, truth, seeded


@pytest.fixture(scope="session")
def tracked_default(default_phantom):
    _, pair, _, _ = default_phantom
    detected = ef.detect_bubbles(pair.frame0)
    return ef.track_bubbles(pair, detected)


@pytest.fixture(scope="session")
def background_default(default_phantom):
    spec, pair, _, _ = default_phantom
    material = ef.MaterialParams.from_young_poisson(spec.young, spec.poisson)
    return ef.solve_background(pair.geometry, material,
                               ef.BoundarySpec.compression(spec.compression))
