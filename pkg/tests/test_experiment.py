import csv

import pytest

import elastoflow as ef
from elastoflow import experiment
from elastoflow.metrics import CSV_HEADER
from elastoflow.plots import render_ablation_chart, render_field_panels


@pytest.fixture(scope="module")
def small_cfg():
    return ef.ExperimentConfig.load(overrides=(
        "phantom.width=48", "phantom.height=48", "phantom.n_bubbles=10",
        "phantom.compression=1.5", "multiscale.levels=2",
        "tracker.search_radius=5",
    ))


def test_ablation_tests_cover_the_five_variants():
    names = [t.name for t in experiment.ABLATION_TESTS]
    assert names == ["T1", "T2", "T3", "T4", "T5"]
    full = experiment.ABLATION_TESTS[-1]
    assert full.use_speckle and full.multiscale and full.use_background
    assert full.bc_mode == "dirichlet_hard"
    plain = experiment.ABLATION_TESTS[1]
    assert not (plain.use_speckle or plain.multiscale or plain.use_background)
    assert plain.bc_mode == "natural"


def test_ablation_outputs(tmp_path, small_cfg):
    results = experiment.run_ablation(small_cfg, str(tmp_path))
    assert [t.name for t, _ in results] == ["T1", "T2", "T3", "T4", "T5"]

    for name in ("frame0.png", "frame1.png", "truth.fld", "bubbles.csv",
                 "tracked.csv", "background.fld", "ablation.csv", "ablation.md",
                 "ablation.png", "manifest.txt"):
        assert (tmp_path / name).exists(), name
    for t, _ in results:
        assert (tmp_path / t.name / "estimate.fld").exists()
        assert (tmp_path / t.name / "metrics.csv").exists()
        assert (tmp_path / t.name / "report.png").exists()

    with open(tmp_path / "ablation.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["test", "beta", "levels", "background", "bc_mode"] + CSV_HEADER
    assert len(rows) == 6
    t5 = dict(zip(rows[0], rows[5]))
    assert t5["test"] == "T5"
    assert t5["background"] == "on"
    assert float(t5["e_rel_u"]) == pytest.approx(results[4][1].e_rel_u)

    md = (tmp_path / "ablation.md").read_text().splitlines()
    assert len(md) == 7  # header, separator, five rows
    assert md[2].startswith("| T1 |")

    # per-variant estimates really differ from each other
    t2 = ef.load_field(str(tmp_path / "T2" / "estimate.fld"))
    t5f = ef.load_field(str(tmp_path / "T5" / "estimate.fld"))
    assert (t2.u2 != t5f.u2).any()


def test_plots_are_deterministic(tmp_path):
    geo = ef.GridGeometry(20, 16)
    u = ef.VectorField.constant(geo, 0.5, -1.0)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_field_panels(str(a), u, title="x")
    render_field_panels(str(b), u, title="x")
    assert a.read_bytes() == b.read_bytes()

    c, d = tmp_path / "c.png", tmp_path / "d.png"
    render_ablation_chart(str(c), ["T1", "T2"], [5.0, 10.0])
    render_ablation_chart(str(d), ["T1", "T2"], [5.0, 10.0])
    assert c.read_bytes() == d.read_bytes()


def test_eval_writes_report_panels(tmp_path, small_cfg):
    pair, truth, _ = ef.generate_phantom(small_cfg.phantom_spec())
    ef.save_field(str(tmp_path / "t.fld"), truth)
    report = experiment.run_eval(small_cfg, str(tmp_path / "ev"),
                                 str(tmp_path / "t.fld"), str(tmp_path / "t.fld"))
    assert report.e_rel_u == 0.0
    text = (tmp_path / "ev" / "metrics.txt").read_text()
    assert text.splitlines()[0] == "e_rel_u = 0"
    assert (tmp_path / "ev" / "report.png").exists()
