"""Coarse-to-fine driver: image pyramid plus incremental-warp solves."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .derivatives import ImagePair, _bilinear, sample_bilinear, warp_image
from .elasticity import BoundarySpec
from .fields import GridGeometry, ScalarField, VectorField, field_linear_combine
from .solver import SolverConfig, assemble, solve
from .speckle import Bubble

__all__ = [
    "PyramidLevel",
    "build_pyramid",
    "run_coarse_to_fine",
    "upsample_double",
    "decimate_field",
]

_BLUR_STD = 1.0
_MIN_DIM = 8


@dataclass(frozen=True)
class PyramidLevel:
    """One resolution level; level 0 is the input, scale = 2**(-level)."""

    level: int
    scale: float
    pair: ImagePair
    bubbles: tuple[Bubble, ...]


def _downsample_image(values: np.ndarray) -> np.ndarray:
    # anti-alias blur, then factor-2 decimation; sizes become ceil(n/2)
    smoothed = ndimage.gaussian_filter(values, _BLUR_STD, mode="reflect")
    return np.clip(smoothed[::2, ::2], 0.0, 1.0)


def _scaled_bubbles(bubbles, scale: float, geometry: GridGeometry) -> tuple[Bubble, ...]:
    out = []
    for b in bubbles:
        cx, cy = b.center[0] * scale, b.center[1] * scale
        if not (0 <= cx <= geometry.width - 1 and 0 <= cy <= geometry.height - 1):
            continue  # fell off the coarse grid
        motion = None if b.motion is None else (b.motion[0] * scale, b.motion[1] * scale)
        out.append(replace(b, center=(cx, cy), motion=motion))
    return tuple(out)


def build_pyramid(pair: ImagePair, bubbles, levels: int) -> list[PyramidLevel]:
    """Image pyramid with per-level rescaled bubbles, finest (input) level first.

    Raises when ``levels`` would take the coarsest grid below 8x8.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    w, h = pair.geometry.width, pair.geometry.height
    for _ in range(levels - 1):
        w, h = math.ceil(w / 2), math.ceil(h / 2)
    if w < _MIN_DIM or h < _MIN_DIM:
        raise ValueError(
            f"{levels} levels reduce {pair.geometry.width}x{pair.geometry.height} "
            f"below {_MIN_DIM}x{_MIN_DIM}")

    out = [PyramidLevel(0, 1.0, pair, tuple(bubbles))]
    f0, f1 = pair.frame0.values, pair.frame1.values
    for k in range(1, levels):
        f0 = _downsample_image(f0)
        f1 = _downsample_image(f1)
        geometry = GridGeometry(f0.shape[1], f0.shape[0], pair.geometry.spacing)
        level_pair = ImagePair(ScalarField(geometry, f0), ScalarField(geometry, f1))
        scale = 2.0 ** (-k)
        out.append(PyramidLevel(k, scale, level_pair, _scaled_bubbles(bubbles, scale, geometry)))
    return out


def upsample_double(u: VectorField, fine: GridGeometry) -> VectorField:
    """Bilinear upsample to a grid of doubled resolution, displacement values x2."""
    if not (math.ceil(fine.width / 2) == u.geometry.width
            and math.ceil(fine.height / 2) == u.geometry.height):
        raise ValueError(f"{fine.width}x{fine.height} is not the doubled grid of "
                         f"{u.geometry.width}x{u.geometry.height}")
    X, Y = np.meshgrid(np.arange(fine.width, dtype=np.float64) / 2.0,
                       np.arange(fine.height, dtype=np.float64) / 2.0)
    return VectorField(fine, 2.0 * _bilinear(u.u1, X, Y), 2.0 * _bilinear(u.u2, X, Y))


def decimate_field(u: VectorField, times: int = 1) -> VectorField:
    """Transfer a field to a coarser level by decimation, values halved per step.

    Plain decimation (no blur) keeps shared pixels exact, so decimating an
    upsampled field returns the original at interior pixels.
    """
    u1, u2 = u.u1, u.u2
    scale = 1.0
    for _ in range(times):
        u1, u2 = u1[::2, ::2], u2[::2, ::2]
        scale *= 0.5
    geometry = GridGeometry(u1.shape[1], u1.shape[0], u.geometry.spacing)
    return VectorField(geometry, scale * u1, scale * u2)


def run_coarse_to_fine(levels: list[PyramidLevel], cfg: SolverConfig, bc: BoundarySpec,
                       background: VectorField | None = None) -> VectorField:
    """Solve coarsest-to-finest with incremental warping; returns the full-resolution field.

    Per level the current estimate is upsampled, frame 0 is warped by it,
    and one assemble/solve produces the update relative to the (level)
    background; bubble motions and Dirichlet targets are taken relative to
    the warp so boundary values stay exact. With a single level this reduces
    to one plain solve.
    """
    if not levels:
        raise ValueError("empty pyramid")
    if cfg.per_bubble_weights is not None:
        # per-level bubble lists are subsets, so an index-aligned list cannot
        # follow them; carry per-bubble weights on the bubbles themselves
        raise ValueError("fold per_bubble_weights into Bubble.weight for multiscale runs")
    if cfg.background is not None:
        # each level needs its own decimated copy, so the full-resolution
        # field has to come in through the dedicated argument
        raise ValueError("pass the background via the background= argument, not SolverConfig")
    if background is not None and background.geometry != levels[0].pair.geometry:
        raise ValueError("background geometry must match the finest level")

    order = sorted(levels, key=lambda lev: lev.level, reverse=True)
    est: VectorField | None = None
    for lev in order:
        geometry = lev.pair.geometry
        bg_k = None if background is None else decimate_field(background, lev.level)
        if bg_k is not None and bg_k.geometry != geometry:
            raise ValueError(f"level {lev.level}: background decimated to "
                             f"{bg_k.geometry.shape}, expected {geometry.shape}")
        bc_k = bc.scaled(lev.scale)
        sigma_k = cfg.sigma if lev.level == 0 else max(cfg.sigma * lev.scale, 1.0)

        u_up = VectorField.zeros(geometry) if est is None else upsample_double(est, geometry)
        pair_k = ImagePair(warp_image(lev.pair.frame0, u_up), lev.pair.frame1)

        if lev.bubbles and cfg.beta > 0:
            if any(b.motion is None for b in lev.bubbles):
                raise ValueError("bubbles must be tracked before the multiscale solve")
            centers = np.array([b.center for b in lev.bubbles], dtype=np.float64)
            carried = sample_bilinear(u_up, centers)
            bubbles_k = [replace(b, motion=(b.motion[0] - s[0], b.motion[1] - s[1]))
                         for b, s in zip(lev.bubbles, carried)]
        else:
            bubbles_k = []

        bg_inner = field_linear_combine(1.0, bg_k, -1.0, u_up) if bg_k is not None \
            else field_linear_combine(-1.0, u_up, 0.0, u_up)
        cfg_k = replace(cfg, sigma=sigma_k, background=bg_inner)
        system = assemble(pair_k, bubbles_k, cfg_k, bc_k, prewarp=u_up)
        v = solve(system, cfg_k)
        est = field_linear_combine(1.0, bg_k, 1.0, v) if bg_k is not None else v
    return est
