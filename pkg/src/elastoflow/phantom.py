"""Synthetic compression phantom: stiff circular inclusion in a softer body.

The ground-truth field is the plane-strain equilibrium of the inhomogeneous
body (fixed top, axially displaced bottom, free sides), frame 1 is frame 0
warped by that field, and the seeded bubbles carry the truth sampled at
their centers. By construction the pair, the truth, and the bubble motions
are exactly consistent under the toolkit's warp convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .derivatives import ImagePair, sample_bilinear, warp_image
from .elasticity import BoundarySpec, solve_plane_strain
from .fields import GridGeometry, ScalarField, VectorField
from .speckle import Bubble

__all__ = ["PhantomSpec", "generate_phantom"]


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry, material contrast, loading, and speckle content of the phantom.

    The weak texture floor keeps the data term alive away from bubbles while
    leaving the bright formations as the dominant motion cues, mirroring a
    sparse-reflector medium. ``compression`` is the axial boundary
    displacement in pixels applied at the bottom edge.
    """

    width: int = 256
    height: int = 256
    inclusion_center: tuple[float, float] | None = None  # None: grid center
    inclusion_radius: float = 40.0
    stiffness_ratio: float = 5.0
    compression: float = 8.0
    n_bubbles: int = 200
    bubble_radius: tuple[float, float] = (2.0, 4.0)
    seed: int = 1729
    young: float = 1.0
    poisson: float = 0.45
    texture_range: tuple[float, float] = (0.05, 0.30)
    bubble_brightness: float = 0.55

    def __post_init__(self) -> None:
        if self.width < 16 or self.height < 16:
            raise ValueError("phantom must be at least 16x16")
        if not self.inclusion_radius > 0:
            raise ValueError("inclusion_radius must be positive")
        if not self.stiffness_ratio > 0:
            raise ValueError("stiffness_ratio must be positive")
        if self.n_bubbles < 0:
            raise ValueError("n_bubbles must be nonnegative")
        rlo, rhi = self.bubble_radius
        if not 0 < rlo <= rhi:
            raise ValueError(f"bad bubble radius range {self.bubble_radius}")
        tlo, thi = self.texture_range
        if not 0 <= tlo < thi <= 1:
            raise ValueError(f"bad texture range {self.texture_range}")
        if not 0 < self.bubble_brightness <= 1:
            raise ValueError("bubble_brightness must lie in (0, 1]")

    @property
    def geometry(self) -> GridGeometry:
        return GridGeometry(self.width, self.height)

    @property
    def center(self) -> tuple[float, float]:
        if self.inclusion_center is not None:
            return self.inclusion_center
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)


def _place_bubbles(spec: PhantomSpec, rng: np.random.Generator) -> list[tuple[float, float, float]]:
    """Non-overlapping (cx, cy, r) by rejection sampling; gap keeps blobs separable."""
    placed: list[tuple[float, float, float]] = []
    budget = 100 * spec.n_bubbles
    attempts = 0
    rlo, rhi = spec.bubble_radius
    while len(placed) < spec.n_bubbles:
        if attempts >= budget:
            raise RuntimeError(
                f"placed only {len(placed)} of {spec.n_bubbles} bubbles "
                f"after {budget} attempts; lower n_bubbles or the radii")
        attempts += 1
        r = float(rng.uniform(rlo, rhi))
        margin = r + 2.0
        cx = float(rng.uniform(margin, spec.width - 1 - margin))
        cy = float(rng.uniform(margin, spec.height - 1 - margin))
        ok = True
        for px, py, pr in placed:
            gap = (cx - px) ** 2 + (cy - py) ** 2
            if gap < (r + pr + 4.0) ** 2:
                ok = False
                break
        if ok:
            placed.append((cx, cy, r))
    return placed


def _stamp_bubbles(frame: np.ndarray, blobs, brightness: float) -> None:
    H, W = frame.shape
    for cx, cy, r in blobs:
        x0, x1 = int(np.floor(cx - r - 1)), int(np.ceil(cx + r + 1))
        y0, y1 = int(np.floor(cy - r - 1)), int(np.ceil(cy + r + 1))
        xs = np.arange(max(0, x0), min(W, x1 + 1))
        ys = np.arange(max(0, y0), min(H, y1 + 1))
        d = np.sqrt((ys[:, None] - cy) ** 2 + (xs[None, :] - cx) ** 2)
        # unit plateau with a one-pixel linear skirt for subpixel centroids
        profile = np.clip(r + 0.5 - d, 0.0, 1.0)
        frame[np.ix_(ys, xs)] += brightness * profile


def generate_phantom(spec: PhantomSpec) -> tuple[ImagePair, VectorField, list[Bubble]]:
    """Build (pair, truth, seeded_bubbles) for one seed.

    Deterministic per seed. Raises RuntimeError when the requested bubble
    count cannot be placed.
    """
    rng = np.random.default_rng(spec.seed)
    geometry = spec.geometry
    H, W = geometry.shape

    noise = rng.random((H, W))
    texture = ndimage.gaussian_filter(noise, 1.0, mode="reflect")
    lo, hi = texture.min(), texture.max()
    tlo, thi = spec.texture_range
    frame0 = tlo + (texture - lo) * ((thi - tlo) / (hi - lo))

    blobs = _place_bubbles(spec, rng)
    _stamp_bubbles(frame0, blobs, spec.bubble_brightness)
    np.clip(frame0, 0.0, 1.0, out=frame0)

    cx0, cy0 = spec.center
    ys, xs = np.indices((H, W))
    inside = (xs - cx0) ** 2 + (ys - cy0) ** 2 <= spec.inclusion_radius ** 2
    young_map = np.where(inside, spec.young * spec.stiffness_ratio, spec.young)

    bc = BoundarySpec.compression(spec.compression)
    truth = solve_plane_strain(geometry, young_map, spec.poisson, bc)

    f0 = ScalarField(geometry, frame0)
    pair = ImagePair(f0, warp_image(f0, truth))

    centers = np.array([(bx, by) for bx, by, _ in blobs], dtype=np.float64)
    bubbles: list[Bubble] = []
    if len(blobs) > 0:
        motions = sample_bilinear(truth, centers)
        bubbles = [Bubble(center=(c[0], c[1]), motion=(m[0], m[1]))
                   for c, m in zip(centers, motions)]
    return pair, truth, bubbles
