"""Plane-strain linearized elasticity on the pixel grid.

Solves mu*Lap(u) + (lambda+mu)*grad(div u) = 0 with prescribed displacement
on Dirichlet segments and zero traction elsewhere. The discretization is the
energy (Ritz) form on bilinear Q1 elements whose nodes are the pixel
centers: traction-free boundaries then come out naturally and the operator
is exactly symmetric, which the shared CG solver requires. Spatially
varying stiffness enters as a per-cell Young's modulus, the harmonic mean
of the four corner pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .fields import GridGeometry, VectorField
from .linalg import eliminate_dirichlet, pcg, reinsert_dirichlet

__all__ = [
    "MaterialParams",
    "BoundarySegment",
    "BoundarySpec",
    "solve_background",
    "solve_plane_strain",
]

_EDGES = ("top", "bottom", "left", "right")
_KINDS = ("dirichlet", "traction_free", "natural")


@dataclass(frozen=True)
class MaterialParams:
    """Lame parameters; constructors and accessors convert to (E, nu)."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")

    @classmethod
    def from_young_poisson(cls, young: float = 1.0, poisson: float = 0.45) -> "MaterialParams":
        if not young > 0:
            raise ValueError(f"young must be positive, got {young}")
        if not 0 <= poisson < 0.5:
            raise ValueError(f"poisson must lie in [0, 0.5), got {poisson}")
        lam = young * poisson / ((1 + poisson) * (1 - 2 * poisson))
        mu = young / (2 * (1 + poisson))
        return cls(lam, mu)

    @property
    def young_modulus(self) -> float:
        return self.mu * (3 * self.lam + 2 * self.mu) / (self.lam + self.mu)

    @property
    def poisson_ratio(self) -> float:
        return self.lam / (2 * (self.lam + self.mu))


@dataclass(frozen=True)
class BoundarySegment:
    """Piece of one image edge.

    ``start``/``stop`` are the along-edge pixel range [start, stop); columns
    for top/bottom, rows for left/right. Corner pixels belong to the top and
    bottom edges, so the side ranges live in [1, height-1). None means the
    full edge.
    """

    edge: str
    kind: str
    value: tuple[float, float] = (0.0, 0.0)
    start: int | None = None
    stop: int | None = None

    def __post_init__(self) -> None:
        if self.edge not in _EDGES:
            raise ValueError(f"unknown edge {self.edge!r}")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")


@dataclass(frozen=True)
class BoundarySpec:
    """Segments tiling the image boundary; unlisted stretches default to natural."""

    segments: tuple[BoundarySegment, ...]

    def __init__(self, segments) -> None:
        object.__setattr__(self, "segments", tuple(segments))

    @classmethod
    def compression(cls, amount: float) -> "BoundarySpec":
        """Fixed top, bottom displaced axially by ``amount``, traction-free sides."""
        return cls([
            BoundarySegment("top", "dirichlet", (0.0, 0.0)),
            BoundarySegment("bottom", "dirichlet", (0.0, float(amount))),
            BoundarySegment("left", "traction_free"),
            BoundarySegment("right", "traction_free"),
        ])

    def scaled(self, factor: float) -> "BoundarySpec":
        """Dirichlet values multiplied by ``factor`` (pyramid level transfer)."""
        return BoundarySpec([
            replace(s, value=(s.value[0] * factor, s.value[1] * factor))
            if s.kind == "dirichlet" else s
            for s in self.segments
        ])

    @property
    def has_dirichlet(self) -> bool:
        return any(s.kind == "dirichlet" for s in self.segments)

    def _edge_range(self, seg: BoundarySegment, geometry: GridGeometry) -> tuple[int, int]:
        if seg.edge in ("top", "bottom"):
            lo, hi = 0, geometry.width
        else:
            lo, hi = 1, geometry.height - 1
        start = lo if seg.start is None else seg.start
        stop = hi if seg.stop is None else seg.stop
        if seg.start is None and seg.stop is None and lo == hi:
            return lo, lo  # whole-edge segment on an edge with no interior pixels
        if not lo <= start < stop <= hi:
            raise ValueError(f"segment range [{start}, {stop}) outside [{lo}, {hi}) on edge {seg.edge}")
        return start, stop

    def validate(self, geometry: GridGeometry) -> None:
        """Ranges in bounds and no two segments overlapping on one edge."""
        for edge in _EDGES:
            taken: list[tuple[int, int]] = []
            for seg in self.segments:
                if seg.edge != edge:
                    continue
                start, stop = self._edge_range(seg, geometry)
                for s0, s1 in taken:
                    if start < s1 and s0 < stop:
                        raise ValueError(f"overlapping segments on edge {edge}")
                taken.append((start, stop))

    def dirichlet_arrays(self, geometry: GridGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(mask, g1, g2) pixel planes for the Dirichlet part of the boundary."""
        self.validate(geometry)
        H, W = geometry.shape
        mask = np.zeros((H, W), dtype=bool)
        g1 = np.zeros((H, W))
        g2 = np.zeros((H, W))
        for seg in self.segments:
            if seg.kind != "dirichlet":
                continue
            start, stop = self._edge_range(seg, geometry)
            if seg.edge == "top":
                sel = (0, slice(start, stop))
            elif seg.edge == "bottom":
                sel = (H - 1, slice(start, stop))
            elif seg.edge == "left":
                sel = (slice(start, stop), 0)
            else:
                sel = (slice(start, stop), W - 1)
            mask[sel] = True
            g1[sel] = seg.value[0]
            g2[sel] = seg.value[1]
        return mask, g1, g2


def _unit_element_stiffness(poisson: float, spacing: float) -> np.ndarray:
    """8x8 Q1 plane-strain element stiffness for E = 1, via 2x2 Gauss quadrature.

    Local dof order: u1 at nodes (0,0),(1,0),(0,1),(1,1) in (x, y) cell
    offsets, then u2 at the same nodes.
    """
    lam = poisson / ((1 + poisson) * (1 - 2 * poisson))
    mu = 1.0 / (2 * (1 + poisson))
    D = np.array([
        [lam + 2 * mu, lam, 0.0],
        [lam, lam + 2 * mu, 0.0],
        [0.0, 0.0, mu],
    ])
    h = spacing
    gp = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))  # on the unit cell
    Ke = np.zeros((8, 8))
    for xi in gp:
        for eta in gp:
            dN_dxi = np.array([-(1 - eta), (1 - eta), -eta, eta]) / h
            dN_deta = np.array([-(1 - xi), -xi, (1 - xi), xi]) / h
            B = np.zeros((3, 8))
            B[0, 0:4] = dN_dxi
            B[1, 4:8] = dN_deta
            B[2, 0:4] = dN_deta
            B[2, 4:8] = dN_dxi
            Ke += (B.T @ D @ B) * (h * h / 4.0)
    return 0.5 * (Ke + Ke.T)  # exact symmetry despite rounding


def _assemble_stiffness(geometry: GridGeometry, young_cells: np.ndarray,
                        poisson: float) -> sp.csr_matrix:
    H, W = geometry.shape
    N = geometry.n_pixels
    Ke1 = _unit_element_stiffness(poisson, geometry.spacing)

    pix = np.arange(N).reshape(H, W)
    n00 = pix[:-1, :-1].ravel()
    n10 = n00 + 1
    n01 = n00 + W
    n11 = n01 + 1
    nodes = np.stack([n00, n10, n01, n11], axis=1)          # (ncells, 4)
    gdofs = np.concatenate([nodes, nodes + N], axis=1)      # (ncells, 8)

    data = young_cells.ravel()[:, None, None] * Ke1[None, :, :]
    rows = np.repeat(gdofs[:, :, None], 8, axis=2)
    cols = np.repeat(gdofs[:, None, :], 8, axis=1)
    A = sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * N, 2 * N))
    return A.tocsr()


def _cell_young(young: np.ndarray) -> np.ndarray:
    """Per-cell stiffness as the harmonic mean of the four corner pixels."""
    inv = 1.0 / young
    s = inv[:-1, :-1] + inv[:-1, 1:] + inv[1:, :-1] + inv[1:, 1:]
    return 4.0 / s


def solve_plane_strain(geometry: GridGeometry, young, poisson: float, bc: BoundarySpec,
                       *, tol: float = 1e-8, max_iter: int = 20_000) -> VectorField:
    """Equilibrium displacement for a (possibly inhomogeneous) plane-strain body.

    ``young`` is a constant or a per-pixel plane; ``poisson`` is shared.
    Dirichlet segments prescribe displacement exactly (eliminated unknowns);
    all other boundary pixels are traction-free.
    """
    if not 0 <= poisson < 0.5:
        raise ValueError(f"poisson must lie in [0, 0.5), got {poisson}")
    if not bc.has_dirichlet:
        raise ValueError("at least one dirichlet segment is required (rigid motions otherwise)")
    H, W = geometry.shape
    young_map = np.broadcast_to(np.asarray(young, dtype=np.float64), (H, W))
    if np.any(young_map <= 0):
        raise ValueError("young modulus must be positive everywhere")

    A = _assemble_stiffness(geometry, _cell_young(young_map), poisson)
    N = geometry.n_pixels
    mask, g1, g2 = bc.dirichlet_arrays(geometry)
    pinned_mask = np.concatenate([mask.ravel(), mask.ravel()])
    pinned_values = np.concatenate([g1.ravel(), g2.ravel()])
    A_ff, rhs_f, _ = eliminate_dirichlet(A, np.zeros(2 * N), pinned_mask, pinned_values)
    res = pcg(A_ff, rhs_f, tol=tol, max_iter=max_iter)
    full = reinsert_dirichlet(res.x, pinned_mask, pinned_values)
    return VectorField(geometry, full[:N].reshape(H, W), full[N:].reshape(H, W))


def solve_background(geometry: GridGeometry, material: MaterialParams, bc: BoundarySpec,
                     *, tol: float = 1e-8, max_iter: int = 20_000) -> VectorField:
    """Homogeneous background field u_bg under the experiment's boundary conditions."""
    return solve_plane_strain(geometry, material.young_modulus, material.poisson_ratio,
                              bc, tol=tol, max_iter=max_iter)
