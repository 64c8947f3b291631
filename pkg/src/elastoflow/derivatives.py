"""Image pairs, discrete image derivatives, and bilinear warping.

Convention used across the toolkit: a displacement field maps frame-1 pixel
coordinates to their frame-0 source, so ``warp_image(I0, u)`` reproduces
frame 1 when ``u`` is the true field. The linearized brightness-constancy
residual consistent with this is ``grad(I) . u - (I1 - I0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridGeometry, ScalarField, VectorField

__all__ = [
    "ImagePair",
    "spatial_gradient",
    "temporal_derivative",
    "warp_image",
    "sample_bilinear",
]


@dataclass(frozen=True, eq=False)
class ImagePair:
    """Two frames of the same scene on one grid, intensities in [0, 1]."""

    frame0: ScalarField
    frame1: ScalarField

    def __post_init__(self) -> None:
        if self.frame0.geometry != self.frame1.geometry:
            raise ValueError("frames must share a geometry")
        for name, f in (("frame0", self.frame0), ("frame1", self.frame1)):
            lo = float(f.values.min())
            hi = float(f.values.max())
            if lo < 0.0 or hi > 1.0:
                raise ValueError(f"{name}: intensities must lie in [0, 1], got [{lo}, {hi}]")

    @property
    def geometry(self) -> GridGeometry:
        return self.frame0.geometry


def spatial_gradient(pair: ImagePair) -> tuple[ScalarField, ScalarField]:
    """(Ix, Iy) averaged over both frames.

    Central differences in the interior, one-sided at the edges, divided by
    the grid spacing.
    """
    h = pair.geometry.spacing
    gx = 0.5 * (np.gradient(pair.frame0.values, h, axis=1) + np.gradient(pair.frame1.values, h, axis=1))
    gy = 0.5 * (np.gradient(pair.frame0.values, h, axis=0) + np.gradient(pair.frame1.values, h, axis=0))
    return ScalarField(pair.geometry, gx), ScalarField(pair.geometry, gy)


def temporal_derivative(pair: ImagePair) -> ScalarField:
    """Frame difference I1 - I0, the unit-time-step stand-in for dI/dt."""
    return ScalarField(pair.geometry, pair.frame1.values - pair.frame0.values)


def _bilinear(values: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Sample ``values`` at continuous (px, py), clamping coordinates to the grid."""
    H, W = values.shape
    px = np.clip(px, 0.0, W - 1.0)
    py = np.clip(py, 0.0, H - 1.0)
    x0 = np.floor(px).astype(np.int64)
    y0 = np.floor(py).astype(np.int64)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    wx = px - x0
    wy = py - y0
    top = values[y0, x0] * (1.0 - wx) + values[y0, x1] * wx
    bot = values[y1, x0] * (1.0 - wx) + values[y1, x1] * wx
    return top * (1.0 - wy) + bot * wy


def warp_image(image: ScalarField, u: VectorField) -> ScalarField:
    """Bilinear backward warp: output(x) = image(x + u(x)), clamped at edges."""
    if image.geometry != u.geometry:
        raise ValueError("image and field must share a geometry")
    H, W = image.geometry.shape
    X, Y = np.meshgrid(np.arange(W, dtype=np.float64), np.arange(H, dtype=np.float64))
    return ScalarField(image.geometry, _bilinear(image.values, X + u.u1, Y + u.u2))


def sample_bilinear(u: VectorField, points: np.ndarray) -> np.ndarray:
    """Sample a vector field at continuous (x, y) points, shape (n, 2) -> (n, 2)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    out = np.empty_like(pts)
    out[:, 0] = _bilinear(u.u1, pts[:, 0], pts[:, 1])
    out[:, 1] = _bilinear(u.u2, pts[:, 0], pts[:, 1])
    return out
