"""Heatmaps, figure reproductions and the bounded-regime convergence sweep."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from ..dynamics import (
    DynamicsConfig,
    FirstOrderState,
    Status,
    Trajectory,
    Variant,
    _classify,
    run,
    simulate,
)
from ..errors import InvalidConfig, UnknownFigure
from ..gaussmix import MixtureParams, as_params

# rows per simulate() call; results do not depend on it
CHUNK_ROWS = 2048

STATUS_KEYS = [s.value for s in Status]


# ---------------------------------------------------------------------------
# heatmaps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatmapConfig:
    target: MixtureParams = MixtureParams(-0.5, 0.5)
    grid_lo: float = -1.0
    grid_hi: float = 1.0
    grid_n: int = 41
    trials: int = 120
    variant: Variant = Variant.OPTIMAL
    eta_g: float = 0.3
    eta_d: float = 0.3
    iterations: int = 3000
    unroll_k: int = 5
    success_tv: float = 0.1
    disc_init_lo: float = -2.0
    disc_init_hi: float = 2.0
    seed: int = 0
    reversed_intervals: str = "empty"

    def __post_init__(self):
        object.__setattr__(self, "target", as_params(self.target))
        if int(self.grid_n) != self.grid_n or self.grid_n < 2:
            raise InvalidConfig(f"grid_n must be an integer >= 2, got {self.grid_n}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidConfig(f"trials must be an integer >= 1, got {self.trials}")
        if not (math.isfinite(self.grid_lo) and math.isfinite(self.grid_hi) and self.grid_lo < self.grid_hi):
            raise InvalidConfig(f"need grid_lo < grid_hi, got [{self.grid_lo}, {self.grid_hi}]")
        if not self.disc_init_lo < self.disc_init_hi:
            raise InvalidConfig("need disc_init_lo < disc_init_hi")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed}")
        # let DynamicsConfig validate the shared fields
        object.__setattr__(self, "variant", self.dynamics().variant)

    def dynamics(self) -> DynamicsConfig:
        return DynamicsConfig(
            variant=self.variant,
            eta_g=self.eta_g,
            eta_d=self.eta_d,
            iterations=self.iterations,
            unroll_k=self.unroll_k,
            success_tv=self.success_tv,
            seed=self.seed,
            reversed_intervals=self.reversed_intervals,
        )

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.grid_lo, self.grid_hi, self.grid_n)

    def echo(self) -> dict:
        d = asdict(self)
        d["target"] = tuple(self.target)
        d["variant"] = self.variant.value
        return d


@dataclass
class HeatmapResult:
    config: HeatmapConfig
    axis: np.ndarray
    success: np.ndarray  # (grid_n, grid_n), [i, j] is the cell with init (axis[i], axis[j])
    counts: dict = field(default_factory=dict)  # status value -> (grid_n, grid_n) int

    def off_diagonal_mean(self) -> float:
        mask = ~np.eye(len(self.axis), dtype=bool)
        return float(self.success[mask].mean())

    def diagonal(self) -> np.ndarray:
        return np.diag(self.success).copy()


def cell_seed(seed: int, i: int, j: int, trial: int) -> np.random.SeedSequence:
    """Seed for one trial of cell (i, j).

    Built from the unordered pair {i, j}, so mirrored cells draw the same
    discriminator and the grid is exactly symmetric under relabelling.
    """
    return np.random.SeedSequence([seed, min(i, j), max(i, j), trial])


def discriminator_init(cfg: HeatmapConfig, i: int, j: int, trial: int) -> np.ndarray:
    rng = np.random.default_rng(cell_seed(cfg.seed, i, j, trial))
    return np.sort(rng.uniform(cfg.disc_init_lo, cfg.disc_init_hi, 4))


def _heatmap_jobs(cfg: HeatmapConfig):
    """(cell i, cell j, trial) rows actually simulated."""
    n = cfg.grid_n
    # oracle runs ignore the discriminator init and have no noise, so every
    # trial of a cell is the same run
    trials = 1 if cfg.variant.uses_oracle else cfg.trials
    return [(i, j, k) for i in range(n) for j in range(n) for k in range(trials)]


def _simulate_chunk(args):
    cfg, jobs = args
    axis = cfg.axis
    mu = np.array([(axis[i], axis[j]) for i, j, _ in jobs])
    if cfg.variant.uses_oracle:
        ends = None
    else:
        ends = np.array([discriminator_init(cfg, i, j, k) for i, j, k in jobs])
    res = simulate(cfg.target, mu, ends, cfg.dynamics())
    return [s.value for s in res.status]


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def run_heatmap(config: HeatmapConfig, workers: int = 1) -> HeatmapResult:
    """Success probability over a grid of generator initialisations.

    Each cell runs ``trials`` dynamics from random discriminators. A trial
    succeeds when it ends with status ``converged``. The result is identical
    for any ``workers``: each run depends only on its own seed, and chunks are
    merged by cell index.
    """
    if not isinstance(config, HeatmapConfig):
        raise InvalidConfig("config must be a HeatmapConfig")
    jobs = _heatmap_jobs(config)
    chunks = [jobs[k : k + CHUNK_ROWS] for k in range(0, len(jobs), CHUNK_ROWS)]
    statuses = _map(_simulate_chunk, [(config, c) for c in chunks], workers)

    n = config.grid_n
    counts = {key: np.zeros((n, n), dtype=int) for key in STATUS_KEYS}
    weight = config.trials if config.variant.uses_oracle else 1
    for chunk, sts in zip(chunks, statuses):
        for (i, j, _), s in zip(chunk, sts):
            counts[s][i, j] += weight
    success = counts[Status.CONVERGED.value] / config.trials
    return HeatmapResult(config, config.axis, success, counts)


# ---------------------------------------------------------------------------
# figure reproductions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FigureSetup:
    target: tuple
    init: tuple
    endpoints: Optional[tuple]
    variant: Variant
    eta: float
    iterations: int
    behaviour: str
    curated: bool


_FIG1_TARGET = (-0.5, 0.5)

FIGURES: dict[str, FigureSetup] = {
    "Fig1a": FigureSetup(
        _FIG1_TARGET, (0.8, -0.1), (-1.5, -0.4, 0.1, 1.8), Variant.FIRST_ORDER, 0.1, 2000, "converging", True
    ),
    "Fig1b": FigureSetup(
        _FIG1_TARGET, (-0.3, 0.5), (-0.4, -0.3, -0.2, 2.0), Variant.FIRST_ORDER, 0.1, 2000, "mode collapse", True
    ),
    "Fig1c": FigureSetup(_FIG1_TARGET, (-0.7, -0.2), None, Variant.OPTIMAL, 0.1, 2000, "optimal discriminator", True),
    "Fig1d": FigureSetup(
        _FIG1_TARGET, (-0.7, -0.2), (-1.1, 0.0, 0.3, 1.3), Variant.FIRST_ORDER, 0.1, 2000, "vanishing gradient", True
    ),
    "Fig3": FigureSetup(
        (-2.0, 2.0), (-1.0, 2.5), (-1.0, 0.2, -1.0, 2.5), Variant.FIRST_ORDER, 0.3, 5000, "discriminator collapse", False
    ),
}

_ALLOWED_OVERRIDES = {"eta", "eta_g", "eta_d", "iterations"}


def figure_key(figure_id: str) -> str:
    key = str(figure_id).strip()
    key = key[3:] if key.lower().startswith("fig") else key
    for name in FIGURES:
        if name[3:].lower() == key.lower():
            return name
    raise UnknownFigure(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")


def figure_config(figure_id: str, overrides: Optional[Mapping] = None) -> tuple[FigureSetup, DynamicsConfig, int]:
    setup = FIGURES[figure_key(figure_id)]
    ov = dict(overrides or {})
    bad = set(ov) - _ALLOWED_OVERRIDES
    if bad:
        raise InvalidConfig(f"only step sizes and iterations can be overridden, got {sorted(bad)}")
    iterations = ov.get("iterations", setup.iterations)
    if int(iterations) != iterations or iterations < 0:
        raise InvalidConfig(f"iterations must be a non-negative integer, got {iterations}")
    eta = ov.get("eta", setup.eta)
    cfg = DynamicsConfig(
        variant=setup.variant,
        eta_g=ov.get("eta_g", eta),
        eta_d=ov.get("eta_d", eta),
        iterations=max(int(iterations), 1),
    )
    return setup, cfg, int(iterations)


def reproduce_trajectory(figure_id: str, overrides: Optional[Mapping] = None) -> Trajectory:
    """Run a published (or curated) figure configuration and record every iterate.

    ``overrides`` may set ``eta`` (both step sizes), ``eta_g``, ``eta_d`` or
    ``iterations``; ``iterations=0`` returns just the initial state.
    """
    setup, cfg, iterations = figure_config(figure_id, overrides)
    init = setup.init if setup.endpoints is None else FirstOrderState(setup.init, setup.endpoints)
    traj = run(setup.target, init, cfg)
    if iterations == 0:
        ends = traj.endpoints[:1]
        status = _classify(cfg, traj.mu[:1], ends, traj.tv[:1], np.zeros(1, dtype=bool))[0]
        traj = Trajectory(traj.mu[:1], ends, traj.loss[:1], traj.tv[:1], status, cfg.variant, dict(traj.meta, steps=0))
    meta = dict(traj.meta)
    meta.update(
        figure=figure_key(figure_id),
        behaviour=setup.behaviour,
        curated=setup.curated,
        variant=cfg.variant.value,
        eta_g=cfg.eta_g,
        eta_d=cfg.eta_d,
        iterations=iterations,
        init=setup.init,
        endpoints0=setup.endpoints if setup.endpoints is not None else "oracle",
        reversed_intervals=cfg.reversed_intervals,
        status=traj.status.value,
    )
    return replace(traj, meta=meta)


# ---------------------------------------------------------------------------
# bounded-regime sweep
# ---------------------------------------------------------------------------


def sample_separated_pairs(rng: np.random.Generator, n: int, c: float, delta: float) -> np.ndarray:
    """n pairs uniform on [-c, c]^2 restricted to |x1 - x2| >= delta (rejection)."""
    out = np.empty((0, 2))
    while out.shape[0] < n:
        cand = rng.uniform(-c, c, (max(2 * n, 16), 2))
        cand = cand[np.abs(cand[:, 0] - cand[:, 1]) >= delta]
        out = np.concatenate([out, cand])
    return out[:n]


def _sweep_chunk(args):
    targets, inits, seeds, cfg = args
    res = simulate(targets, inits, None, cfg, seeds=seeds)
    conv = [s == Status.CONVERGED and tv <= cfg.success_tv for s, tv in zip(res.status, res.tv)]
    return {
        "converged": conv,
        "steps": res.steps.tolist(),
        "min_sep": res.min_separation.tolist(),
        "max_abs": res.max_abs_coord.tolist(),
        "tv": res.tv.tolist(),
    }


def theorem1_sweep(
    n_runs: int,
    C: float,
    delta: float,
    seed: int = 0,
    eta: float = 0.01,
    max_iter: int = 100_000,
    noise: float = 1e-12,
    init_at_target: bool = False,
    workers: int = 1,
) -> dict:
    """Optimal-discriminator runs from random admissible (target, init) pairs.

    Targets and inits have coordinates in [-C, C] and separation >= delta. Each
    run stops at the first iterate with TV <= delta or after ``max_iter``
    steps. Returns a JSON-ready summary.
    """
    if int(n_runs) != n_runs or n_runs < 1:
        raise InvalidConfig(f"n_runs must be a positive integer, got {n_runs}")
    if not C >= 1:
        raise InvalidConfig(f"C must be >= 1, got {C}")
    if not 0 < delta < 1:
        raise InvalidConfig(f"delta must lie in (0, 1), got {delta}")
    if not 2 * delta <= 2 * C:
        raise InvalidConfig("delta too large for the box")
    if int(seed) != seed or seed < 0:
        raise InvalidConfig(f"seed must be a non-negative integer, got {seed}")
    if not noise >= 0:
        raise InvalidConfig(f"noise must be >= 0, got {noise}")
    cfg = DynamicsConfig(
        variant=Variant.OPTIMAL,
        eta_g=eta,
        iterations=int(max_iter),
        noise_sigma=noise,
        success_tv=delta,
        seed=int(seed),
        stop_on_converge=True,
    )
    sample_ss, noise_ss = np.random.SeedSequence(int(seed)).spawn(2)
    rng = np.random.default_rng(sample_ss)
    targets = sample_separated_pairs(rng, n_runs, C, delta)
    inits = targets.copy() if init_at_target else sample_separated_pairs(rng, n_runs, C, delta)
    seeds = noise_ss.spawn(n_runs)

    idx = np.arange(n_runs)
    parts = np.array_split(idx, max(1, min(workers, n_runs)))
    tasks = [(targets[p], inits[p], [seeds[k] for k in p], cfg) for p in parts if p.size]
    results = _map(_sweep_chunk, tasks, workers)
    merged = {key: [v for r in results for v in r[key]] for key in results[0]}

    conv = np.array(merged["converged"], dtype=bool)
    steps = np.array(merged["steps"])
    min_sep = np.array(merged["min_sep"])
    init_sep = np.abs(inits[:, 0] - inits[:, 1])
    target_sep = np.abs(targets[:, 0] - targets[:, 1])
    ratio = min_sep / np.minimum(init_sep, target_sep)
    max_abs = np.array(merged["max_abs"])
    return {
        "n_runs": int(n_runs),
        "C": float(C),
        "delta": float(delta),
        "seed": int(seed),
        "eta": float(eta),
        "max_iter": int(max_iter),
        "noise": float(noise),
        "init_at_target": bool(init_at_target),
        "n_converged": int(conv.sum()),
        "fraction_converged": float(conv.mean()),
        "steps_max": int(steps.max()),
        "steps_mean": float(steps.mean()),
        "steps_min": int(steps.min()),
        "min_separation": float(min_sep.min()),
        "min_separation_ratio": float(ratio.min()),
        "max_abs_coord": float(max_abs.max()),
        "final_tv_max": float(np.max(merged["tv"])),
    }
