import json
import math

import numpy as np
import pytest

from gmmgan.dynamics import Status, Variant
from gmmgan.errors import InvalidConfig, UnknownFigure
from gmmgan.harness import FIGURES, HeatmapConfig, reproduce_trajectory, run_heatmap, theorem1_sweep
from gmmgan.harness import io, svg
from gmmgan.harness.experiments import cell_seed, discriminator_init, figure_key, sample_separated_pairs

SMALL = dict(grid_n=5, trials=3, iterations=200)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"grid_n": 1},
        {"grid_n": 3.5},
        {"trials": 0},
        {"grid_lo": 1.0, "grid_hi": -1.0},
        {"grid_hi": math.inf},
        {"disc_init_lo": 2.0, "disc_init_hi": 2.0},
        {"seed": -1},
        {"eta_g": 0.0},
        {"variant": "zeroth-order"},
    ],
)
def test_heatmap_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        HeatmapConfig(**kwargs)


def test_run_heatmap_rejects_other_configs():
    with pytest.raises(InvalidConfig):
        run_heatmap({"grid_n": 3})


def test_cell_seed_is_unordered():
    a = discriminator_init(HeatmapConfig(), 1, 4, 2)
    b = discriminator_init(HeatmapConfig(), 4, 1, 2)
    assert np.array_equal(a, b)
    assert np.all(np.diff(a) >= 0)
    assert cell_seed(0, 1, 4, 0).entropy == cell_seed(0, 4, 1, 0).entropy


def test_single_trial_cells_are_binary():
    for variant in ("optimal", "first-order", "unrolled"):
        res = run_heatmap(HeatmapConfig(variant=variant, grid_n=2, trials=1, iterations=100))
        assert set(np.unique(res.success)) <= {0.0, 1.0}


def test_counts_sum_to_trials():
    res = run_heatmap(HeatmapConfig(variant="first-order", **SMALL))
    total = sum(res.counts.values())
    assert np.all(total == 3)
    np.testing.assert_array_equal(res.success, res.counts[Status.CONVERGED.value] / 3)


def test_heatmap_is_transpose_symmetric():
    res = run_heatmap(HeatmapConfig(variant="first-order", **SMALL))
    np.testing.assert_array_equal(res.success, res.success.T)
    for c in res.counts.values():
        np.testing.assert_array_equal(c, c.T)


def test_heatmap_independent_of_workers(monkeypatch):
    import gmmgan.harness.experiments as ex

    cfg = HeatmapConfig(variant="first-order", **SMALL)
    serial = run_heatmap(cfg, workers=1)
    # small chunks force several tasks through the pool
    monkeypatch.setattr(ex, "CHUNK_ROWS", 7)
    pooled = run_heatmap(cfg, workers=2)
    np.testing.assert_array_equal(serial.success, pooled.success)
    for key in serial.counts:
        np.testing.assert_array_equal(serial.counts[key], pooled.counts[key])


def test_optimal_heatmap_diagonal_fails():
    res = run_heatmap(HeatmapConfig(variant="optimal", grid_n=5, trials=4, iterations=1500))
    assert np.all(res.diagonal() == 0)
    assert res.off_diagonal_mean() == 1.0


def test_heatmap_echo_is_serialisable():
    echo = HeatmapConfig(variant="unrolled").echo()
    assert echo["variant"] == "unrolled" and echo["target"] == (-0.5, 0.5)
    json.dumps(echo)


def test_figure_keys():
    assert figure_key("1a") == "Fig1a"
    assert figure_key("Fig3") == "Fig3"
    assert figure_key("fig1D") == "Fig1d"
    with pytest.raises(UnknownFigure):
        figure_key("Fig2")


def test_reproduce_unknown_figure():
    with pytest.raises(UnknownFigure):
        reproduce_trajectory("Fig9")


def test_reproduce_rejects_other_overrides():
    with pytest.raises(InvalidConfig):
        reproduce_trajectory("Fig1c", {"target": (0, 1)})
    with pytest.raises(InvalidConfig):
        reproduce_trajectory("Fig1c", {"iterations": -1})


def test_fig1c_converges_with_witness():
    traj = reproduce_trajectory("Fig1c")
    assert traj.status is Status.CONVERGED
    assert traj.tv[-1] < 0.1
    # each step stores its witness, a half-line or interval with a finite cut
    assert np.all(np.isfinite(traj.endpoints).any(axis=1))
    assert traj.meta["curated"] is True


def test_zero_iterations_is_initial_state():
    traj = reproduce_trajectory("Fig1c", {"iterations": 0})
    assert len(traj) == 1
    assert tuple(traj.mu[0]) == FIGURES["Fig1c"].init
    fo = reproduce_trajectory("Fig1a", {"iterations": 0})
    assert tuple(fo.endpoints[0]) == FIGURES["Fig1a"].endpoints


def test_fig3_collapses():
    traj = reproduce_trajectory("Fig3")
    assert traj.status is Status.DISC_COLLAPSED
    assert np.all(traj.widths[-1] < 1e-3)
    assert traj.tv[-1] > 0.1
    assert traj.meta["curated"] is False


@pytest.mark.parametrize("fig, status", [("1a", Status.CONVERGED), ("1b", Status.MODE_COLLAPSED), ("1d", Status.DISC_COLLAPSED)])
def test_curated_figures_show_their_behaviour(fig, status):
    assert reproduce_trajectory(fig).status is status


def test_separated_pairs():
    rng = np.random.default_rng(0)
    p = sample_separated_pairs(rng, 500, 3.0, 0.5)
    assert p.shape == (500, 2)
    assert np.all(np.abs(p) <= 3) and np.all(np.abs(p[:, 0] - p[:, 1]) >= 0.5)


@pytest.mark.parametrize("kwargs", [{"C": 0.5}, {"delta": 0.0}, {"delta": 1.0}, {"n_runs": 0}, {"seed": -2}])
def test_sweep_validation(kwargs):
    args = dict(n_runs=2, C=2.0, delta=0.1)
    args.update(kwargs)
    with pytest.raises(InvalidConfig):
        theorem1_sweep(**args)


def test_sweep_single_run():
    s = theorem1_sweep(1, 2.0, 0.2, seed=3, eta=0.05, max_iter=5000)
    assert s["n_runs"] == 1
    assert s["fraction_converged"] in (0.0, 1.0)


def test_sweep_at_target_stops_immediately():
    s = theorem1_sweep(5, 2.0, 0.1, init_at_target=True)
    assert s["fraction_converged"] == 1.0
    assert s["steps_max"] == 0


def test_sweep_deterministic_and_worker_free():
    a = theorem1_sweep(6, 2.0, 0.2, seed=1, eta=0.05, max_iter=3000)
    b = theorem1_sweep(6, 2.0, 0.2, seed=1, eta=0.05, max_iter=3000, workers=3)
    assert a == b


def test_trajectory_csv_round_trip(tmp_path):
    traj = reproduce_trajectory("Fig1c", {"iterations": 20})
    text = io.trajectory_to_csv(traj, traj.meta)
    lines = text.splitlines()
    assert lines[0] == "# kind=trajectory"
    header = next(l for l in lines if not l.startswith("#"))
    assert header.split(",") == io.TRAJECTORY_COLUMNS
    path = tmp_path / "t.csv"
    io.write_text(path, text)
    meta, cols = io.read_table(path)
    assert meta["kind"] == "trajectory" and meta["figure"] == "Fig1c"
    np.testing.assert_array_equal(cols["mu_hat_1"], traj.mu[:, 0])
    np.testing.assert_array_equal(cols["tv"], traj.tv)
    # the oracle run has no second interval here; infinities survive the trip
    assert np.array_equal(cols["l2"], traj.endpoints[:, 2])


def test_float_format_is_round_trip():
    for v in (0.1, 1 / 3, -2.5e-300, math.inf, -math.inf):
        assert float(io.fmt(v)) == v
    assert io.fmt(math.inf) == "inf" and io.fmt(-math.inf) == "-inf"


def test_heatmap_csv_layout(tmp_path):
    cfg = HeatmapConfig(variant="first-order", grid_n=3, trials=2, iterations=50)
    res = run_heatmap(cfg)
    text = io.heatmap_to_csv(res, cfg.echo())
    header = next(l for l in text.splitlines() if not l.startswith("#"))
    assert header.split(",") == io.HEATMAP_COLUMNS
    assert "# variant=first-order" in text
    path = tmp_path / "h.csv"
    io.write_text(path, text)
    _, cols = io.read_table(path)
    assert len(cols["success_prob"]) == 9
    np.testing.assert_array_equal(cols["success_prob"].reshape(3, 3), res.success)


def test_summary_json():
    text = io.summary_to_json({"b": 1, "a": np.float64(0.5)})
    d = json.loads(text)
    assert d["kind"] == "theorem1" and d["a"] == 0.5
    assert list(d) == sorted(d)


def test_svg_rendering():
    traj = reproduce_trajectory("Fig1a", {"iterations": 30})
    meta, cols = {"kind": "trajectory"}, {c: np.asarray(col) for c, col in zip(io.TRAJECTORY_COLUMNS, _traj_cols(traj))}
    out = svg.render(meta, cols)
    assert out.startswith("<svg") and out.rstrip().endswith("</svg>")
    assert "<path" in out
    axis = np.array([0.0, 1.0])
    m1, m2 = np.meshgrid(axis, axis, indexing="ij")
    hm = {"mu1_init": m1.ravel(), "mu2_init": m2.ravel(), "success_prob": np.array([0.0, 1.0, 1.0, 0.0])}
    out = svg.render({"kind": "heatmap"}, hm)
    assert out.count("<rect") >= 4


def _traj_cols(traj):
    n = len(traj)
    return [np.arange(n), traj.mu[:, 0], traj.mu[:, 1], *traj.endpoints.T, traj.loss, traj.tv]


def test_variant_enum_covers_cli_choices():
    assert {v.value for v in Variant} >= {"optimal", "first-order", "unrolled", "first-order-abs", "unrolled-abs"}
