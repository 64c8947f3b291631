"""Assembly and solution of the elastographic optical-flow normal equations.

The estimate minimizes, over updates v living on the pixel grid,

    F(v) = sum (grad(I).(u_bg + v) - I_t)^2 h^2          data
         + alpha * sum_edges (dv)^2                      smoothness
         + beta * sum_i w_i sum_x g_sigma(x, c_i) |v(x) - t_i|^2 h^2
         + gamma * sum_{dirichlet pixels} |v(x) - g_eff(x)|^2 h   (weak mode)

with t_i the bubble motion minus the background sampled at the bubble
center, and I_t = I1 - I0 under the warp convention of ``derivatives``.
F is quadratic, so assembly produces its exact Hessian A = Hess F and the
negated gradient at zero r = -grad F(0); the minimizer solves A v = r.
Hard Dirichlet boundary values are imposed by eliminating the pinned
unknowns. The factor-2 bookkeeping lives in A and r, never in F.

dof order: u1 plane then u2 plane, row-major pixels within each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .derivatives import ImagePair, sample_bilinear, spatial_gradient, temporal_derivative
from .elasticity import BoundarySpec
from .fields import GridGeometry, VectorField
from .linalg import eliminate_dirichlet, pcg, reinsert_dirichlet
from .speckle import Bubble

__all__ = [
    "TRUNCATION_RADIUS_SIGMAS",
    "SolverConfig",
    "AssembledSystem",
    "gaussian_weight",
    "assemble",
    "solve",
    "functional_terms",
    "functional_value",
    "FunctionalTerms",
]

# Contributions beyond this radius are below 3.4e-4 of the kernel mass and
# are dropped without renormalization; keeps the speckle block sparse.
TRUNCATION_RADIUS_SIGMAS = 4.0

_BC_MODES = ("natural", "dirichlet_hard", "dirichlet_weak")


@dataclass(frozen=True)
class SolverConfig:
    """Weights, boundary handling, and linear-solver budget for one solve.

    ``per_bubble_weights`` overrides the bubbles' own weights when given
    (one factor per bubble, multiplied by ``beta``). ``background`` is the
    field the update is measured against; None means estimate the full
    field directly.
    """

    alpha: float
    beta: float = 0.0
    sigma: float = 5.0
    per_bubble_weights: tuple[float, ...] | None = None
    bc_mode: str = "dirichlet_hard"
    weak_weight: float = 1e4
    background: VectorField | None = None
    lin_tol: float = 1e-8
    lin_max_iter: int = 10_000

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.bc_mode not in _BC_MODES:
            raise ValueError(f"bc_mode must be one of {_BC_MODES}, got {self.bc_mode!r}")
        if not self.weak_weight > 0:
            raise ValueError(f"weak_weight must be positive, got {self.weak_weight}")
        if not self.lin_tol > 0:
            raise ValueError(f"lin_tol must be positive, got {self.lin_tol}")
        if self.lin_max_iter < 1:
            raise ValueError(f"lin_max_iter must be positive, got {self.lin_max_iter}")
        if self.per_bubble_weights is not None:
            w = tuple(float(x) for x in self.per_bubble_weights)
            if any(not x > 0 for x in w):
                raise ValueError("per_bubble_weights must be positive")
            object.__setattr__(self, "per_bubble_weights", w)


def gaussian_weight(x, center, sigma: float) -> float:
    """Normalized 2D Gaussian g_sigma(x, center), truncated at 4 sigma."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    dx = float(x[0]) - float(center[0])
    dy = float(x[1]) - float(center[1])
    d2 = dx * dx + dy * dy
    radius = TRUNCATION_RADIUS_SIGMAS * sigma
    if d2 > radius * radius:
        return 0.0
    return math.exp(-d2 / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)


def _gaussian_window(center, sigma: float, shape) -> tuple[slice, slice, np.ndarray]:
    """Truncated kernel on its bounding box.

    Same distances and truncation decisions as ``gaussian_weight``; the
    values agree with the scalar path to an ulp (np.exp vs math.exp).
    """
    H, W = shape
    cx, cy = float(center[0]), float(center[1])
    radius = TRUNCATION_RADIUS_SIGMAS * sigma
    x0 = max(0, int(math.ceil(cx - radius)))
    x1 = min(W - 1, int(math.floor(cx + radius)))
    y0 = max(0, int(math.ceil(cy - radius)))
    y1 = min(H - 1, int(math.floor(cy + radius)))
    if x0 > x1 or y0 > y1:
        return slice(0, 0), slice(0, 0), np.zeros((0, 0))
    xs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
    ys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
    d2 = ys[:, None] * ys[:, None] + xs[None, :] * xs[None, :]
    g = np.exp(-d2 / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)
    g[d2 > radius * radius] = 0.0
    return slice(y0, y1 + 1), slice(x0, x1 + 1), g


def _bubble_weights(bubbles, cfg: SolverConfig) -> list[float]:
    if cfg.per_bubble_weights is not None:
        if len(cfg.per_bubble_weights) != len(bubbles):
            raise ValueError(
                f"per_bubble_weights has {len(cfg.per_bubble_weights)} entries "
                f"for {len(bubbles)} bubbles")
        return list(cfg.per_bubble_weights)
    return [b.weight for b in bubbles]


def _check_bubbles(bubbles, geometry: GridGeometry) -> None:
    W, H = geometry.width, geometry.height
    for i, b in enumerate(bubbles):
        if b.motion is None:
            raise ValueError(f"bubble {i} has no motion; track before assembling")
        cx, cy = b.center
        if not (0 <= cx <= W - 1 and 0 <= cy <= H - 1):
            raise ValueError(f"bubble {i} center {b.center} outside the grid")


def _background_planes(cfg: SolverConfig, geometry: GridGeometry):
    if cfg.background is None:
        z = np.zeros(geometry.shape)
        return z, z
    if cfg.background.geometry != geometry:
        raise ValueError("background geometry does not match the image pair")
    return cfg.background.u1, cfg.background.u2


def _prewarp_planes(prewarp: VectorField | None, geometry: GridGeometry):
    if prewarp is None:
        z = np.zeros(geometry.shape)
        return z, z
    if prewarp.geometry != geometry:
        raise ValueError("prewarp geometry does not match the image pair")
    return prewarp.u1, prewarp.u2


def _speckle_targets(bubbles, cfg: SolverConfig, geometry: GridGeometry):
    """Per-bubble (weight, window slices, kernel, target) with background removed."""
    if cfg.beta == 0.0 or not bubbles:
        return []
    _check_bubbles(bubbles, geometry)
    weights = _bubble_weights(bubbles, cfg)
    centers = np.array([b.center for b in bubbles], dtype=np.float64)
    if cfg.background is None:
        bg_at = np.zeros((len(bubbles), 2))
    else:
        bg_at = sample_bilinear(cfg.background, centers)
    out = []
    for b, w, bg_c in zip(bubbles, weights, bg_at):
        ysl, xsl, g = _gaussian_window(b.center, cfg.sigma, geometry.shape)
        target = (b.motion[0] - bg_c[0], b.motion[1] - bg_c[1])
        out.append((w, ysl, xsl, g, target))
    return out


@dataclass(frozen=True)
class AssembledSystem:
    """Eliminated SPD system A v_free = rhs plus the bookkeeping to rebuild v."""

    geometry: GridGeometry
    operator: sp.csr_matrix
    rhs: np.ndarray
    pinned_mask: np.ndarray    # (2*n_pixels,) bool
    pinned_values: np.ndarray  # (2*n_pixels,) float, zero where free
    free_index: np.ndarray     # full dof -> free position, -1 when pinned

    @property
    def n_free(self) -> int:
        return self.operator.shape[0]


def assemble(pair: ImagePair, bubbles: list[Bubble] | tuple[Bubble, ...], cfg: SolverConfig,
             bc: BoundarySpec, prewarp: VectorField | None = None) -> AssembledSystem:
    """Build the normal equations A v = r of F for one resolution level.

    ``prewarp`` is the displacement already applied to frame 0 by warping
    (multiscale increments); Dirichlet targets are taken relative to it.
    """
    if not cfg.alpha > 0:
        raise ValueError("alpha must be positive for a well-posed system")
    geometry = pair.geometry
    H, W = geometry.shape
    N = geometry.n_pixels
    h = geometry.spacing
    q = 2.0 * h * h

    gx, gy = spatial_gradient(pair)
    Ix, Iy = gx.values, gy.values
    dt = temporal_derivative(pair).values
    bg1, bg2 = _background_planes(cfg, geometry)
    pw1, pw2 = _prewarp_planes(prewarp, geometry)

    # data term: quadratic block q * grad(I) grad(I)^T, load against the
    # residual at v = 0
    d11 = q * Ix * Ix
    d12 = q * Ix * Iy
    d22 = q * Iy * Iy
    resid0 = Ix * bg1 + Iy * bg2 - dt
    r1 = -q * resid0 * Ix
    r2 = -q * resid0 * Iy

    # speckle term: pointwise mass and load from each truncated kernel
    for w, ysl, xsl, g, target in _speckle_targets(bubbles, cfg, geometry):
        scale = q * cfg.beta * w
        d11[ysl, xsl] += scale * g
        d22[ysl, xsl] += scale * g
        r1[ysl, xsl] += scale * g * target[0]
        r2[ysl, xsl] += scale * g * target[1]

    pinned_mask = np.zeros(2 * N, dtype=bool)
    pinned_values = np.zeros(2 * N)
    if cfg.bc_mode != "natural":
        mask, gb1, gb2 = bc.dirichlet_arrays(geometry)
        t1 = gb1 - pw1 - bg1
        t2 = gb2 - pw2 - bg2
        if cfg.bc_mode == "dirichlet_weak":
            wdiag = 2.0 * cfg.weak_weight * h
            d11[mask] += wdiag
            d22[mask] += wdiag
            r1[mask] += wdiag * t1[mask]
            r2[mask] += wdiag * t2[mask]
        else:
            flat = mask.ravel()
            pinned_mask[:N] = flat
            pinned_mask[N:] = flat
            pinned_values[:N][flat] = t1[mask]
            pinned_values[N:][flat] = t2[mask]

    # smoothness: graph Laplacian over grid edges, weight 2*alpha per
    # component (the spacing cancels in (dv/h)^2 h^2); free boundary pixels
    # simply have fewer edges, which realizes the natural condition
    pix = np.arange(N).reshape(H, W)
    ph = pix[:, :-1].ravel()
    qh = pix[:, 1:].ravel()
    pv = pix[:-1, :].ravel()
    qv = pix[1:, :].ravel()
    ea = np.concatenate([ph, pv])
    eb = np.concatenate([qh, qv])
    w_edge = np.full(ea.size, 2.0 * cfg.alpha)

    rows = [pix.ravel(), pix.ravel() + N, pix.ravel(), pix.ravel() + N]
    cols = [pix.ravel(), pix.ravel() + N, pix.ravel() + N, pix.ravel()]
    vals = [d11.ravel(), d22.ravel(), d12.ravel(), d12.ravel()]
    for off in (0, N):
        rows += [ea + off, eb + off, ea + off, eb + off]
        cols += [ea + off, eb + off, eb + off, ea + off]
        vals += [w_edge, w_edge, -w_edge, -w_edge]
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * N, 2 * N)).tocsr()
    rhs = np.concatenate([r1.ravel(), r2.ravel()])

    A_ff, rhs_f, free_index = eliminate_dirichlet(A, rhs, pinned_mask, pinned_values)
    return AssembledSystem(geometry, A_ff, rhs_f, pinned_mask, pinned_values, free_index)


def solve(system: AssembledSystem, cfg: SolverConfig) -> VectorField:
    """Minimize F via preconditioned CG on the assembled system.

    Returns the update field v (the full field when cfg.background is None);
    the caller composes u = u_bg + v. Raises ConvergenceError or
    IndefiniteOperatorError from the underlying iteration.
    """
    res = pcg(system.operator, system.rhs, tol=cfg.lin_tol, max_iter=cfg.lin_max_iter)
    full = reinsert_dirichlet(res.x, system.pinned_mask, system.pinned_values)
    N = system.geometry.n_pixels
    H, W = system.geometry.shape
    return VectorField(system.geometry, full[:N].reshape(H, W), full[N:].reshape(H, W))


@dataclass(frozen=True)
class FunctionalTerms:
    """Nonnegative pieces of the discrete functional at a given update."""

    data: float
    smoothness: float
    speckle: float
    boundary: float

    @property
    def total(self) -> float:
        return self.data + self.smoothness + self.speckle + self.boundary


def functional_terms(pair: ImagePair, bubbles, cfg: SolverConfig, bc: BoundarySpec,
                     u: VectorField, prewarp: VectorField | None = None) -> FunctionalTerms:
    """Evaluate F term by term, straight from the definition.

    Kept independent of ``assemble`` on purpose: it is the oracle the
    assembled Hessian and load are tested against.
    """
    geometry = pair.geometry
    if u.geometry != geometry:
        raise ValueError("field geometry does not match the image pair")
    h = geometry.spacing
    h2 = h * h
    Ix, Iy = (f.values for f in spatial_gradient(pair))
    dt = temporal_derivative(pair).values
    bg1, bg2 = _background_planes(cfg, geometry)

    resid = Ix * (bg1 + u.u1) + Iy * (bg2 + u.u2) - dt
    data = float(np.sum(resid * resid) * h2)

    smooth = 0.0
    for comp in (u.u1, u.u2):
        dxc = comp[:, 1:] - comp[:, :-1]
        dyc = comp[1:, :] - comp[:-1, :]
        smooth += float(np.sum(dxc * dxc) + np.sum(dyc * dyc))
    smooth *= cfg.alpha

    speckle = 0.0
    for w, ysl, xsl, g, target in _speckle_targets(bubbles, cfg, geometry):
        dev1 = u.u1[ysl, xsl] - target[0]
        dev2 = u.u2[ysl, xsl] - target[1]
        speckle += cfg.beta * w * float(np.sum(g * (dev1 * dev1 + dev2 * dev2))) * h2

    boundary = 0.0
    if cfg.bc_mode == "dirichlet_weak":
        pw1, pw2 = _prewarp_planes(prewarp, geometry)
        mask, gb1, gb2 = bc.dirichlet_arrays(geometry)
        dev1 = u.u1[mask] - (gb1 - pw1 - bg1)[mask]
        dev2 = u.u2[mask] - (gb2 - pw2 - bg2)[mask]
        boundary = cfg.weak_weight * float(np.sum(dev1 * dev1 + dev2 * dev2)) * h

    return FunctionalTerms(data, smooth, speckle, boundary)


def functional_value(pair: ImagePair, bubbles, cfg: SolverConfig, bc: BoundarySpec,
                     u: VectorField, prewarp: VectorField | None = None) -> float:
    return functional_terms(pair, bubbles, cfg, bc, u, prewarp).total
