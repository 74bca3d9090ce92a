import math

import numpy as np
import pytest

from gmmgan.dynamics import (
    DynamicsConfig,
    FirstOrderState,
    Status,
    Trajectory,
    Variant,
    _classify,
    run,
    simulate,
    step_first_order,
    step_optimal,
    step_unrolled,
)
from gmmgan.errors import InvalidConfig
from gmmgan.loss import grad_generator

TARGET = (-0.5, 0.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"eta_g": 0.0},
        {"eta_g": -0.1},
        {"eta_d": -1.0},
        {"iterations": 0},
        {"iterations": 2.5},
        {"unroll_k": -1},
        {"noise_sigma": -1e-3},
        {"success_tv": 0.0},
        {"variant": "second-order"},
        {"reversed_intervals": "clip"},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfig):
        DynamicsConfig(**kwargs)


def test_variant_from_string():
    assert DynamicsConfig(variant="unrolled-abs").variant is Variant.UNROLLED_ABS


def test_first_order_needs_endpoints():
    with pytest.raises(InvalidConfig):
        run(TARGET, (0.1, 0.2), DynamicsConfig(variant="first-order"))


def test_unrolled_k0_equals_first_order_bitwise():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = FirstOrderState(rng.uniform(-2, 2, 2), rng.uniform(-3, 3, 4))
        t = rng.uniform(-2, 2, 2)
        for mode in ("signed", "empty"):
            a = step_first_order(t, s, 0.3, 0.2, mode)
            b = step_unrolled(t, s, 0.3, 0.2, 0, mode)
            assert a == b


def test_first_order_step_is_simultaneous():
    s = FirstOrderState((0.1, 0.9), (-1.0, 0.0, 0.2, 1.5))
    new = step_first_order(TARGET, s, 0.5, 0.0)
    gm = grad_generator(TARGET, s.model, s.endpoints, "empty")
    assert new.model == (0.1 - 0.5 * gm[0], 0.9 - 0.5 * gm[1])
    assert new.endpoints == s.endpoints


def test_optimal_abs_matches_optimal_exactly():
    rng = np.random.default_rng(3)
    mu0 = rng.uniform(-1, 1, (20, 2))
    a = simulate(TARGET, mu0, None, DynamicsConfig(variant="optimal", eta_g=0.3, iterations=200))
    b = simulate(TARGET, mu0, None, DynamicsConfig(variant="optimal-abs", eta_g=0.3, iterations=200))
    assert np.array_equal(a.mu, b.mu)


def test_step_optimal_moves_towards_target():
    from gmmgan.discriminator import tv_distance

    m = (0.3, 0.9)
    for _ in range(20):
        nxt = step_optimal(TARGET, m, 0.1)
        assert tv_distance(TARGET, nxt) <= tv_distance(TARGET, m) + 1e-12
        m = nxt


def test_run_is_deterministic():
    cfg = DynamicsConfig(variant="unrolled", eta_g=0.3, eta_d=0.3, iterations=150, noise_sigma=1e-6, seed=7)
    s = FirstOrderState((0.2, -0.6), (-1.0, 0.1, 0.3, 1.2))
    a, b = run(TARGET, s, cfg), run(TARGET, s, cfg)
    for name in ("mu", "endpoints", "loss", "tv"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = run(TARGET, s, cfg.with_(seed=8))
    assert not np.array_equal(a.mu, c.mu)


def test_batch_rows_match_single_runs():
    rng = np.random.default_rng(5)
    mu = rng.uniform(-1, 1, (6, 2))
    ends = np.sort(rng.uniform(-2, 2, (6, 4)), axis=1)
    cfg = DynamicsConfig(variant="first-order", eta_g=0.3, eta_d=0.3, iterations=300)
    batch = simulate(TARGET, mu, ends, cfg)
    for i in range(6):
        single = simulate(TARGET, mu[i : i + 1], ends[i : i + 1], cfg)
        assert np.array_equal(single.mu[0], batch.mu[i])
        assert single.status[0] == batch.status[i]


def test_per_row_targets_match_shared_target():
    rng = np.random.default_rng(2)
    mu = rng.uniform(-1, 1, (4, 2))
    cfg = DynamicsConfig(variant="optimal", eta_g=0.05, iterations=50)
    shared = simulate(TARGET, mu, None, cfg)
    rows = simulate(np.tile(TARGET, (4, 1)), mu, None, cfg)
    assert np.array_equal(shared.mu, rows.mu)


def test_trajectory_shape_and_immutability():
    cfg = DynamicsConfig(variant="first-order", iterations=25)
    traj = run(TARGET, FirstOrderState((0.0, 0.8), (-1.0, -0.2, 0.1, 1.0)), cfg)
    assert len(traj) == 26
    assert traj.mu[0].tolist() == [0.0, 0.8]
    assert traj.widths.shape == (26, 2)
    with pytest.raises(ValueError):
        traj.mu[0, 0] = 1.0


def test_optimal_trajectory_records_witness():
    traj = run(TARGET, (0.3, 0.9), DynamicsConfig(variant="optimal", eta_g=0.1, iterations=30))
    np.testing.assert_allclose(traj.loss - 1, traj.tv, atol=1e-12)


def test_identical_init_collapses():
    res = simulate(TARGET, [(0.2, 0.2)], None, DynamicsConfig(variant="optimal", eta_g=0.3, iterations=100))
    assert res.status[0] is Status.MODE_COLLAPSED


def test_status_priority():
    cfg = DynamicsConfig(variant="first-order")
    mu = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    ends = np.array(
        [
            [0.0, 0.0, 1.0, 1.0],  # both widths 0 and mode collapsed
            [0.0, 1.0, 2.0, 3.0],  # mode collapsed only
            [0.0, 1.0, 2.0, 3.0],  # low TV
            [0.0, 1.0, 2.0, 3.0],  # high TV
            [0.0, 0.0, 1.0, 1.0],  # diverged beats everything
        ]
    )
    tv = np.array([0.0, 0.0, 0.05, 0.5, 0.0])
    div = np.array([False, False, False, False, True])
    assert _classify(cfg, mu, ends, tv, div) == [
        Status.DISC_COLLAPSED,
        Status.MODE_COLLAPSED,
        Status.CONVERGED,
        Status.BUDGET,
        Status.DIVERGED,
    ]
    # the oracle has no stored discriminator to collapse
    assert _classify(cfg.with_(variant="optimal"), mu[:1], ends[:1], tv[:1], div[:1]) == [Status.MODE_COLLAPSED]


def test_divergence_is_detected_and_frozen():
    cfg = DynamicsConfig(variant="first-order", eta_g=50.0, eta_d=0.0, iterations=50, divergence_bound=3.0)
    # the first step throws the second mean about 5.5 units toward [1, 2]
    res = simulate(TARGET, [(0.0, 0.4)], [(1.0, 2.0, 5.0, 6.0)], cfg)
    assert res.status[0] is Status.DIVERGED
    assert res.steps[0] < 50


def test_stop_on_converge_freezes_run():
    cfg = DynamicsConfig(variant="optimal", eta_g=0.1, iterations=5000, stop_on_converge=True, success_tv=0.05)
    res = simulate(TARGET, [(0.3, 0.9)], None, cfg)
    assert res.status[0] is Status.CONVERGED
    assert res.steps[0] < 5000
    at_target = simulate(TARGET, [TARGET], None, cfg)
    assert at_target.steps[0] == 0


def test_optimal_tv_is_monotone():
    rng = np.random.default_rng(31)
    for _ in range(5):
        t = np.sort(rng.uniform(-3, 3, 2))
        m = rng.uniform(-3, 3, 2)
        if abs(t[1] - t[0]) < 0.1 or abs(m[1] - m[0]) < 0.1:
            continue
        cfg = DynamicsConfig(variant="optimal", eta_g=0.01, iterations=400, success_tv=0.1)
        tv = run(tuple(t), tuple(m), cfg).tv
        live = tv[:-1] > 0.1
        assert np.all((tv[1:] - tv[:-1])[live] <= 1e-6)


def test_noise_only_moves_generator():
    cfg = DynamicsConfig(variant="optimal", eta_g=0.1, iterations=20, noise_sigma=1e-3, seed=1)
    a = run(TARGET, (0.3, 0.9), cfg)
    b = run(TARGET, (0.3, 0.9), cfg.with_(noise_sigma=0.0))
    diff = np.abs(a.mu - b.mu).max()
    assert 0 < diff < 0.05


def test_trajectory_is_a_dataclass_record():
    t = Trajectory(np.zeros((1, 2)), np.full((1, 4), math.inf), [1.0], [0.0], Status.CONVERGED, Variant.OPTIMAL)
    assert len(t) == 1


def test_single_gaussian_descent_contracts_to_one_step_band():
    from gmmgan.discriminator import single_gaussian_optimal

    eta = 0.1
    band = eta * 0.5 / math.sqrt(2 * math.pi)  # largest possible step, at zero gap
    rng = np.random.default_rng(4)
    for m in rng.uniform(-5, 5, 20):
        errs = [abs(m)]
        for _ in range(5000):
            if m == 0.0:
                break
            iv = single_gaussian_optimal(0.0, m)
            m = m - eta * grad_generator((0.0, 0.0), (m, m), (iv.lo, iv.hi, math.inf, math.inf))[0]
            errs.append(abs(m))
        e = np.array(errs)
        inside = np.argmax(e <= band)
        assert e[inside] <= band
        assert np.all(np.diff(e[: inside + 1]) < 0)
        assert np.all(e[inside:] <= band)
