"""Bubble detection and normalized cross-correlation tracking.

Bubbles are the large bright speckle formations whose motion seeds the
field estimate. Motions follow the toolkit's field convention: the vector
points from a bubble's frame-1 location back to its frame-0 location, so
``warp_image(frame0, u)`` with ``u(center) = motion`` reproduces frame 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .derivatives import ImagePair
from .fields import ScalarField

__all__ = [
    "Bubble",
    "detect_bubbles",
    "track_bubbles",
    "write_bubbles_csv",
    "read_bubbles_csv",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Bubble:
    """One tracked speckle formation.

    center is (cx, cy) in pixels of frame 0; motion is (ux, uy) or None
    before tracking; weight is the per-bubble penalty factor; match_score
    is the peak normalized correlation in [-1, 1].
    """

    center: tuple[float, float]
    motion: tuple[float, float] | None = None
    weight: float = 1.0
    match_score: float | None = None

    def __post_init__(self) -> None:
        # normalize to builtin floats so CSV round-trips stay clean
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.motion is not None:
            object.__setattr__(self, "motion", (float(self.motion[0]), float(self.motion[1])))
        object.__setattr__(self, "weight", float(self.weight))
        if self.match_score is not None:
            object.__setattr__(self, "match_score", float(self.match_score))
        if not self.weight > 0:
            raise ValueError(f"bubble weight must be positive, got {self.weight}")
        if self.match_score is not None and not -1.0 - 1e-9 <= self.match_score <= 1.0 + 1e-9:
            raise ValueError(f"match score outside [-1, 1]: {self.match_score}")


def detect_bubbles(image: ScalarField, *, threshold: float = 0.5,
                   min_area: int = 9, max_area: int = 400) -> list[Bubble]:
    """Find bright blobs by thresholding and 8-connected component analysis.

    Components with pixel counts in [min_area, max_area] become bubbles with
    intensity-weighted centroids. Returned in scan order (top-left first).
    """
    if min_area < 1 or max_area < min_area:
        raise ValueError(f"bad area bounds [{min_area}, {max_area}]")
    vals = image.values
    labels, n = ndimage.label(vals >= threshold, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    flat = labels.ravel()
    wsum = np.bincount(flat, weights=vals.ravel(), minlength=n + 1)
    ys, xs = np.indices(vals.shape)
    wx = np.bincount(flat, weights=(vals * xs).ravel(), minlength=n + 1)
    wy = np.bincount(flat, weights=(vals * ys).ravel(), minlength=n + 1)
    out = []
    for lab in range(1, n + 1):
        if not min_area <= areas[lab] <= max_area:
            continue
        if wsum[lab] <= 0:
            continue
        out.append(Bubble(center=(wx[lab] / wsum[lab], wy[lab] / wsum[lab])))
    return out


def _zncc_scores(ref: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Zero-mean NCC of one reference patch against a (ny, nx, p, p) window stack."""
    npix = ref.size
    ref0 = ref - ref.mean()
    ref_ss = float(np.einsum("kl,kl->", ref0, ref0))
    wmean = windows.mean(axis=(2, 3))
    num = np.einsum("ijkl,kl->ij", windows, ref0)  # means drop out against zero-mean ref
    wss = np.einsum("ijkl,ijkl->ij", windows, windows) - npix * wmean * wmean
    den2 = ref_ss * np.maximum(wss, 0.0)
    scores = np.zeros_like(num)
    ok = den2 > 1e-20
    scores[ok] = num[ok] / np.sqrt(den2[ok])
    return scores


def _parabolic_offset(s_lo: float, s_c: float, s_hi: float) -> float:
    denom = s_lo - 2.0 * s_c + s_hi
    if abs(denom) < 1e-12 * max(abs(s_lo), abs(s_c), abs(s_hi), 1e-30):
        return 0.0
    off = 0.5 * (s_lo - s_hi) / denom
    return float(np.clip(off, -0.5, 0.5))


def track_bubbles(pair: ImagePair, bubbles: list[Bubble], *, patch_radius: int = 7,
                  search_radius: int = 15, accept_score: float = 0.6) -> list[Bubble]:
    """Track each bubble by exhaustive integer NCC search plus parabolic subpixel refinement.

    A bubble is dropped when its reference patch leaves frame 0, when no
    candidate placement fits in frame 1, or when the peak score falls below
    ``accept_score``. Integer ties resolve to the smallest (axial, lateral)
    offset; an exact integer match skips subpixel refinement.
    """
    if patch_radius < 1 or search_radius < 1:
        raise ValueError("patch_radius and search_radius must be positive")
    H, W = pair.geometry.shape
    I0 = pair.frame0.values
    I1 = pair.frame1.values
    r = patch_radius
    out = []
    for bub in bubbles:
        ax = int(round(bub.center[0]))
        ay = int(round(bub.center[1]))
        if not (r <= ax < W - r and r <= ay < H - r):
            continue  # reference patch exceeds image bounds
        ref = I0[ay - r:ay + r + 1, ax - r:ax + r + 1]
        # candidate offsets whose target patch stays inside frame 1
        dx_lo = max(-search_radius, r - ax)
        dx_hi = min(search_radius, W - 1 - r - ax)
        dy_lo = max(-search_radius, r - ay)
        dy_hi = min(search_radius, H - 1 - r - ay)
        if dx_lo > dx_hi or dy_lo > dy_hi:
            continue
        region = I1[ay + dy_lo - r:ay + dy_hi + r + 1, ax + dx_lo - r:ax + dx_hi + r + 1]
        windows = sliding_window_view(region, (2 * r + 1, 2 * r + 1))
        scores = _zncc_scores(ref, windows)
        iy, ix = np.unravel_index(int(np.argmax(scores)), scores.shape)
        peak = float(scores[iy, ix])
        if peak < accept_score:
            continue
        dx = float(dx_lo + ix)
        dy = float(dy_lo + iy)
        if 1.0 - peak > 1e-9:
            if 0 < ix < scores.shape[1] - 1:
                dx += _parabolic_offset(scores[iy, ix - 1], peak, scores[iy, ix + 1])
            if 0 < iy < scores.shape[0] - 1:
                dy += _parabolic_offset(scores[iy - 1, ix], peak, scores[iy + 1, ix])
        # found offset points frame0 -> frame1; the field convention wants the reverse
        out.append(replace(bub, motion=(-dx, -dy), match_score=peak))
    return out


def write_bubbles_csv(path: str, bubbles: list[Bubble]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cx", "cy", "ux", "uy", "weight", "score"])
        for i, b in enumerate(bubbles):
            ux, uy = ("", "") if b.motion is None else (repr(b.motion[0]), repr(b.motion[1]))
            score = "" if b.match_score is None else repr(b.match_score)
            writer.writerow([i, repr(b.center[0]), repr(b.center[1]), ux, uy, repr(b.weight), score])


def read_bubbles_csv(path: str) -> list[Bubble]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["id", "cx", "cy", "ux", "uy", "weight", "score"]
        if reader.fieldnames != expected:
            raise ValueError(f"{path}: expected columns {expected}, got {reader.fieldnames}")
        for row in reader:
            motion = None
            if row["ux"] != "" and row["uy"] != "":
                motion = (float(row["ux"]), float(row["uy"]))
            score = float(row["score"]) if row["score"] != "" else None
            out.append(Bubble(center=(float(row["cx"]), float(row["cy"])),
                              motion=motion, weight=float(row["weight"]), match_score=score))
    return out
