"""Grid geometry and the scalar/vector field containers shared by every stage."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridGeometry",
    "ScalarField",
    "VectorField",
    "field_linear_combine",
    "field_norm_l2",
    "scalar_norm_l2",
]


@dataclass(frozen=True)
class GridGeometry:
    """Regular pixel grid.

    ``width`` counts columns (lateral axis x1), ``height`` counts rows
    (axial axis x2, pointing down as displayed). ``spacing`` is the pixel
    pitch used by the discrete integrals; all lengths elsewhere are in
    pixel units.
    """

    width: int
    height: int
    spacing: float = 1.0

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.width}x{self.height}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def shape(self) -> tuple[int, int]:
        """Numpy shape (rows, cols) of one component plane."""
        return (self.height, self.width)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height


def _component(values, geometry: GridGeometry, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1 and arr.size == geometry.n_pixels:
        # row-major flat layout is accepted and reshaped
        arr = arr.reshape(geometry.shape)
    if arr.shape != geometry.shape:
        raise ValueError(f"{name}: expected shape {geometry.shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: values must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Single real value per pixel, stored as a read-only (height, width) array."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _component(self.values, self.geometry, "values"))

    @classmethod
    def filled(cls, geometry: GridGeometry, value: float = 0.0) -> "ScalarField":
        return cls(geometry, np.full(geometry.shape, float(value)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Displacement field with lateral component ``u1`` and axial component ``u2``."""

    geometry: GridGeometry
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "u1", _component(self.u1, self.geometry, "u1"))
        object.__setattr__(self, "u2", _component(self.u2, self.geometry, "u2"))

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> "VectorField":
        z = np.zeros(geometry.shape)
        return cls(geometry, z, z)

    @classmethod
    def constant(cls, geometry: GridGeometry, u1: float, u2: float) -> "VectorField":
        return cls(geometry, np.full(geometry.shape, float(u1)), np.full(geometry.shape, float(u2)))


def field_linear_combine(a: float, f: VectorField, b: float, g: VectorField) -> VectorField:
    """Pointwise a*f + b*g; the fields must share a geometry."""
    if f.geometry != g.geometry:
        raise ValueError(f"geometry mismatch: {f.geometry} vs {g.geometry}")
    return VectorField(f.geometry, a * f.u1 + b * g.u1, a * f.u2 + b * g.u2)


def field_norm_l2(u: VectorField) -> float:
    """Discrete L2 norm sqrt(sum (u1^2 + u2^2) * spacing^2)."""
    h2 = u.geometry.spacing ** 2
    return math.sqrt((np.sum(u.u1 * u.u1) + np.sum(u.u2 * u.u2)) * h2)


def scalar_norm_l2(f: ScalarField) -> float:
    """Discrete L2 norm of one component plane, same quadrature as field_norm_l2."""
    return math.sqrt(np.sum(f.values * f.values) * f.geometry.spacing ** 2)
