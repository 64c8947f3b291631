"""End-to-end pipelines behind the CLI subcommands.

Each ``run_*`` writes a fixed set of files into an output directory plus a
``manifest.txt`` recording the config hash, the seed and library versions.
Manifests carry no timestamps so repeated runs are byte-comparable.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig
from .derivatives import ImagePair
from .elasticity import solve_background
from .field_io import load_field, load_image, save_field, save_image
from .fields import GridGeometry, VectorField
from .metrics import CSV_HEADER, ErrorReport, compare
from .phantom import generate_phantom
from .plots import render_ablation_chart, render_field_panels
from .pyramid import build_pyramid, run_coarse_to_fine
from .speckle import Bubble, detect_bubbles, read_bubbles_csv, track_bubbles, write_bubbles_csv

__all__ = [
    "AblationTest", "ABLATION_TESTS", "write_manifest",
    "run_simulate", "run_track", "run_background", "run_flow", "run_eofm",
    "run_eval", "run_ablation",
]


def write_manifest(out_dir: str, command: str, cfg: ExperimentConfig) -> None:
    lines = [
        f"command = {command}",
        f"config_sha256 = {cfg.config_hash()}",
        f"seed = {cfg.seed()}",
        f"elastoflow = {__version__}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
    ]
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ensure_dir(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)


def _load_pair(frame0_path: str, frame1_path: str) -> ImagePair:
    return ImagePair(load_image(frame0_path), load_image(frame1_path))


def _load_vector_field(path: str, geometry: GridGeometry | None = None) -> VectorField:
    field = load_field(path)
    if not isinstance(field, VectorField):
        raise ValueError(f"{path}: expected a 2-component field")
    if geometry is not None and field.geometry != geometry:
        raise ValueError(f"{path}: geometry {field.geometry.shape} does not match "
                         f"the image pair {geometry.shape}")
    return field


# ---------------------------------------------------------------------------
# individual commands


@dataclass(frozen=True)
class SimulateResult:
    pair: ImagePair
    truth: VectorField
    bubbles: list[Bubble]


def run_simulate(cfg: ExperimentConfig, out_dir: str) -> SimulateResult:
    """Phantom pair + ground-truth field + seeded bubble table."""
    _ensure_dir(out_dir)
    pair, truth, bubbles = generate_phantom(cfg.phantom_spec())
    save_image(os.path.join(out_dir, "frame0.png"), pair.frame0)
    save_image(os.path.join(out_dir, "frame1.png"), pair.frame1)
    save_field(os.path.join(out_dir, "truth.fld"), truth)
    write_bubbles_csv(os.path.join(out_dir, "bubbles.csv"), bubbles)
    write_manifest(out_dir, "simulate", cfg)
    return SimulateResult(pair, truth, bubbles)


def run_track(cfg: ExperimentConfig, out_dir: str, frame0_path: str, frame1_path: str,
              bubbles_path: str | None = None) -> list[Bubble]:
    """Detect (or load) bubbles on frame 0 and track them into frame 1."""
    _ensure_dir(out_dir)
    pair = _load_pair(frame0_path, frame1_path)
    tp = cfg.tracker_params()
    if bubbles_path is None:
        bubbles = detect_bubbles(pair.frame0, threshold=tp.detect_threshold,
                                 min_area=tp.min_area, max_area=tp.max_area)
    else:
        bubbles = read_bubbles_csv(bubbles_path)
    tracked = track_bubbles(pair, bubbles, patch_radius=tp.patch_radius,
                            search_radius=tp.search_radius, accept_score=tp.accept_score)
    write_bubbles_csv(os.path.join(out_dir, "tracked.csv"), tracked)
    write_manifest(out_dir, "track", cfg)
    return tracked


def run_background(cfg: ExperimentConfig, out_dir: str, width: int | None = None,
                   height: int | None = None) -> VectorField:
    """Homogeneous linear-elastic field for the configured boundary conditions."""
    _ensure_dir(out_dir)
    spec = cfg.phantom_spec()
    geometry = GridGeometry(width or spec.width, height or spec.height)
    tol, max_iter = cfg.elasticity_params()
    bg = solve_background(geometry, cfg.material(), cfg.boundary(), tol=tol, max_iter=max_iter)
    save_field(os.path.join(out_dir, "background.fld"), bg)
    render_field_panels(os.path.join(out_dir, "background.png"), bg,
                        title="background displacement")
    write_manifest(out_dir, "background", cfg)
    return bg


def _gather_bubbles(cfg: ExperimentConfig, pair: ImagePair,
                    bubbles_path: str | None) -> list[Bubble]:
    """Bubble table with motions: load if fully tracked, otherwise track here."""
    tp = cfg.tracker_params()
    if bubbles_path is None:
        bubbles = detect_bubbles(pair.frame0, threshold=tp.detect_threshold,
                                 min_area=tp.min_area, max_area=tp.max_area)
    else:
        bubbles = read_bubbles_csv(bubbles_path)
        if bubbles and all(b.motion is not None for b in bubbles):
            return bubbles
    return track_bubbles(pair, bubbles, patch_radius=tp.patch_radius,
                         search_radius=tp.search_radius, accept_score=tp.accept_score)


def _gather_background(cfg: ExperimentConfig, geometry: GridGeometry,
                       background: str) -> VectorField | None:
    if background == "none":
        return None
    if background == "auto":
        tol, max_iter = cfg.elasticity_params()
        return solve_background(geometry, cfg.material(), cfg.boundary(),
                                tol=tol, max_iter=max_iter)
    return _load_vector_field(background, geometry)


def _estimate(cfg: ExperimentConfig, pair: ImagePair, bubbles_path: str | None,
              background: str, levels: int) -> VectorField:
    solver_cfg = cfg.solver_config()
    bubbles = _gather_bubbles(cfg, pair, bubbles_path) if solver_cfg.beta > 0 else []
    bg = _gather_background(cfg, pair.geometry, background)
    pyramid = build_pyramid(pair, bubbles, levels)
    return run_coarse_to_fine(pyramid, solver_cfg, cfg.boundary(), background=bg)


def run_flow(cfg: ExperimentConfig, out_dir: str, frame0_path: str, frame1_path: str,
             bubbles_path: str | None = None, background: str = "none") -> VectorField:
    """Single-scale solve at native resolution."""
    _ensure_dir(out_dir)
    pair = _load_pair(frame0_path, frame1_path)
    est = _estimate(cfg, pair, bubbles_path, background, levels=1)
    save_field(os.path.join(out_dir, "estimate.fld"), est)
    render_field_panels(os.path.join(out_dir, "estimate.png"), est, title="estimated displacement")
    write_manifest(out_dir, "flow", cfg)
    return est


def run_eofm(cfg: ExperimentConfig, out_dir: str, frame0_path: str, frame1_path: str,
             bubbles_path: str | None = None, background: str = "auto") -> VectorField:
    """Full method: tracked bubbles, elastic background, coarse-to-fine solve."""
    _ensure_dir(out_dir)
    pair = _load_pair(frame0_path, frame1_path)
    est = _estimate(cfg, pair, bubbles_path, background, levels=cfg.levels())
    save_field(os.path.join(out_dir, "estimate.fld"), est)
    render_field_panels(os.path.join(out_dir, "estimate.png"), est, title="estimated displacement")
    write_manifest(out_dir, "eofm", cfg)
    return est


def _write_eval_outputs(out_dir: str, estimate: VectorField, report: ErrorReport) -> None:
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        writer.writerow([repr(v) for v in report.csv_row()])
    with open(os.path.join(out_dir, "metrics.txt"), "w") as fh:
        fh.write(report.to_text())
    render_field_panels(os.path.join(out_dir, "report.png"), estimate, report=report,
                        title="estimate vs truth")


def run_eval(cfg: ExperimentConfig, out_dir: str, estimate_path: str,
             truth_path: str) -> ErrorReport:
    """Error metrics and panel figure for an estimate against ground truth."""
    _ensure_dir(out_dir)
    estimate = _load_vector_field(estimate_path)
    truth = _load_vector_field(truth_path, estimate.geometry)
    report = compare(estimate, truth)
    _write_eval_outputs(out_dir, estimate, report)
    write_manifest(out_dir, "eval", cfg)
    return report


# ---------------------------------------------------------------------------
# ablation


@dataclass(frozen=True)
class AblationTest:
    """One row of the synthetic study: which ingredients are switched on."""
    name: str
    label: str
    use_speckle: bool
    multiscale: bool
    use_background: bool
    bc_mode: str


ABLATION_TESTS: tuple[AblationTest, ...] = (
    AblationTest("T1", "speckle, multiscale", True, True, False, "natural"),
    AblationTest("T2", "smoothness only, single scale", False, False, False, "natural"),
    AblationTest("T3", "background, multiscale", False, True, True, "dirichlet_hard"),
    AblationTest("T4", "speckle, background, single scale", True, False, True, "dirichlet_hard"),
    AblationTest("T5", "full method", True, True, True, "dirichlet_hard"),
)


def run_ablation(cfg: ExperimentConfig, out_dir: str,
                 tests: tuple[AblationTest, ...] = ABLATION_TESTS,
                 ) -> list[tuple[AblationTest, ErrorReport]]:
    """Phantom + one tracking pass + one background solve, then every variant.

    Writes the shared inputs at the top level, one subdirectory per test with
    the estimated field and its metrics, and the summary table as CSV,
    markdown and a bar chart.
    """
    _ensure_dir(out_dir)
    pair, truth, seeded = generate_phantom(cfg.phantom_spec())
    save_image(os.path.join(out_dir, "frame0.png"), pair.frame0)
    save_image(os.path.join(out_dir, "frame1.png"), pair.frame1)
    save_field(os.path.join(out_dir, "truth.fld"), truth)
    write_bubbles_csv(os.path.join(out_dir, "bubbles.csv"), seeded)

    tp = cfg.tracker_params()
    detected = detect_bubbles(pair.frame0, threshold=tp.detect_threshold,
                              min_area=tp.min_area, max_area=tp.max_area)
    tracked = track_bubbles(pair, detected, patch_radius=tp.patch_radius,
                            search_radius=tp.search_radius, accept_score=tp.accept_score)
    write_bubbles_csv(os.path.join(out_dir, "tracked.csv"), tracked)

    tol, max_iter = cfg.elasticity_params()
    bg = solve_background(pair.geometry, cfg.material(), cfg.boundary(),
                          tol=tol, max_iter=max_iter)
    save_field(os.path.join(out_dir, "background.fld"), bg)

    base = cfg.solver_config()
    results: list[tuple[AblationTest, ErrorReport]] = []
    for test in tests:
        solver_cfg = replace(base,
                             beta=base.beta if test.use_speckle else 0.0,
                             bc_mode=test.bc_mode)
        levels = cfg.levels() if test.multiscale else 1
        pyramid = build_pyramid(pair, tracked if test.use_speckle else [], levels)
        est = run_coarse_to_fine(pyramid, solver_cfg, cfg.boundary(),
                                 background=bg if test.use_background else None)
        report = compare(est, truth)
        sub = os.path.join(out_dir, test.name)
        _ensure_dir(sub)
        save_field(os.path.join(sub, "estimate.fld"), est)
        _write_eval_outputs(sub, est, report)
        results.append((test, report))

    _write_ablation_tables(out_dir, cfg, results)
    write_manifest(out_dir, "ablation", cfg)
    return results


def _write_ablation_tables(out_dir: str, cfg: ExperimentConfig,
                           results: list[tuple[AblationTest, ErrorReport]]) -> None:
    base = cfg.solver_config()
    with open(os.path.join(out_dir, "ablation.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["test", "beta", "levels", "background", "bc_mode"] + CSV_HEADER)
        for test, report in results:
            writer.writerow([
                test.name,
                repr(base.beta if test.use_speckle else 0.0),
                cfg.levels() if test.multiscale else 1,
                "on" if test.use_background else "off",
                test.bc_mode,
            ] + [repr(v) for v in report.csv_row()])

    rows = ["| test | variant | speckle | levels | background | bc | e_rel(u) % |",
            "|---|---|---|---|---|---|---|"]
    for test, report in results:
        rows.append("| {} | {} | {} | {} | {} | {} | {:.2f} |".format(
            test.name, test.label,
            "on" if test.use_speckle else "off",
            cfg.levels() if test.multiscale else 1,
            "on" if test.use_background else "off",
            test.bc_mode, report.e_rel_u))
    with open(os.path.join(out_dir, "ablation.md"), "w") as fh:
        fh.write("\n".join(rows) + "\n")

    render_ablation_chart(os.path.join(out_dir, "ablation.png"),
                          [t.name for t, _ in results],
                          [r.e_rel_u for _, r in results])
