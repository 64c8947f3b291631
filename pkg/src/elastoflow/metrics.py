"""Error reporting between an estimated and a reference displacement field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, VectorField, field_norm_l2, scalar_norm_l2

__all__ = ["ErrorReport", "compare", "CSV_HEADER"]

CSV_HEADER = ["e_rel_u", "e_rel_u1", "e_rel_u2", "max_abs_u1", "max_abs_u2"]


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Relative errors in percent, plus per-component absolute error maps.

    Relative entries are NaN when the corresponding reference norm is zero.
    """

    e_rel_u: float
    e_rel_u1: float
    e_rel_u2: float
    max_abs_u1: float
    max_abs_u2: float
    abs_u1: ScalarField
    abs_u2: ScalarField

    def to_text(self) -> str:
        lines = [f"{key} = {value:.6g}" for key, value in zip(CSV_HEADER, self.csv_row())]
        return "\n".join(lines) + "\n"

    def csv_row(self) -> list[float]:
        return [self.e_rel_u, self.e_rel_u1, self.e_rel_u2, self.max_abs_u1, self.max_abs_u2]


def _rel(err_norm: float, ref_norm: float) -> float:
    if ref_norm == 0.0:
        return math.nan
    return 100.0 * err_norm / ref_norm


def compare(estimate: VectorField, truth: VectorField) -> ErrorReport:
    """Relative L2 errors (percent, whole-field and per component) and |error| maps."""
    if estimate.geometry != truth.geometry:
        raise ValueError("estimate and truth must share a geometry")
    g = estimate.geometry
    d1 = estimate.u1 - truth.u1
    d2 = estimate.u2 - truth.u2
    diff = VectorField(g, d1, d2)
    abs1 = ScalarField(g, np.abs(d1))
    abs2 = ScalarField(g, np.abs(d2))
    return ErrorReport(
        e_rel_u=_rel(field_norm_l2(diff), field_norm_l2(truth)),
        e_rel_u1=_rel(scalar_norm_l2(ScalarField(g, d1)), scalar_norm_l2(ScalarField(g, truth.u1))),
        e_rel_u2=_rel(scalar_norm_l2(ScalarField(g, d2)), scalar_norm_l2(ScalarField(g, truth.u2))),
        max_abs_u1=float(abs1.values.max()),
        max_abs_u2=float(abs2.values.max()),
        abs_u1=abs1,
        abs_u2=abs2,
    )
