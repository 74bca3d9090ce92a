"""Training dynamics as iterated maps.

All variants run through one vectorised engine (:func:`simulate`) that steps
N independent runs at once.  Every operation is elementwise across runs, so
a run's iterates do not depend on which other runs share its batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .discriminator import optimal_endpoints_batch, signed_mass_batch, tv_batch
from .errors import InvalidConfig
from .gaussmix import MeansLike, as_params
from .loss import (
    ROLE,
    EndpointVector,
    _Terms,
    _check_mode,
    _gen_grad,
    gap_sign,
    interval_weights,
    mass_gap,
    unrolled_generator_grad,
)

DIVERGENCE_BOUND = 100.0
COLLAPSE_EPS = 1e-3
NOISE_BLOCK = 1024


class Variant(str, enum.Enum):
    OPTIMAL = "optimal"
    FIRST_ORDER = "first-order"
    UNROLLED = "unrolled"
    FIRST_ORDER_ABS = "first-order-abs"
    UNROLLED_ABS = "unrolled-abs"
    OPTIMAL_ABS = "optimal-abs"

    @property
    def uses_oracle(self) -> bool:
        return self in (Variant.OPTIMAL, Variant.OPTIMAL_ABS)

    @property
    def absolute(self) -> bool:
        return self in (Variant.FIRST_ORDER_ABS, Variant.UNROLLED_ABS, Variant.OPTIMAL_ABS)

    @property
    def unrolled(self) -> bool:
        return self in (Variant.UNROLLED, Variant.UNROLLED_ABS)


class Status(str, enum.Enum):
    CONVERGED = "converged"
    BUDGET = "iteration-budget-exhausted"
    DIVERGED = "diverged"
    MODE_COLLAPSED = "mode-collapsed"
    DISC_COLLAPSED = "discriminator-collapsed"


# integer codes used inside the batch engine
_STATUS_CODES = [Status.CONVERGED, Status.DIVERGED, Status.MODE_COLLAPSED, Status.DISC_COLLAPSED, Status.BUDGET]
_CODE = {s: i for i, s in enumerate(_STATUS_CODES)}


@dataclass(frozen=True)
class DynamicsConfig:
    variant: Variant = Variant.FIRST_ORDER
    eta_g: float = 0.1
    eta_d: float = 0.1
    iterations: int = 1000
    unroll_k: int = 5
    noise_sigma: float = 0.0
    seed: int = 0
    success_tv: float = 0.1
    reversed_intervals: str = "empty"
    unroll_differentiate: bool = True
    stop_on_converge: bool = False
    divergence_bound: float = DIVERGENCE_BOUND
    collapse_eps: float = COLLAPSE_EPS

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError as exc:
            raise InvalidConfig(f"unknown variant {self.variant!r}") from exc
        if not self.eta_g > 0:
            raise InvalidConfig(f"eta_g must be > 0, got {self.eta_g}")
        if not self.eta_d >= 0:
            raise InvalidConfig(f"eta_d must be >= 0, got {self.eta_d}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise InvalidConfig(f"iterations must be a positive integer, got {self.iterations}")
        if int(self.unroll_k) != self.unroll_k or self.unroll_k < 0:
            raise InvalidConfig(f"unroll_k must be >= 0, got {self.unroll_k}")
        if not self.noise_sigma >= 0:
            raise InvalidConfig(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.success_tv > 0:
            raise InvalidConfig(f"success_tv must be > 0, got {self.success_tv}")
        if self.reversed_intervals not in ("signed", "empty"):
            raise InvalidConfig(f"reversed_intervals must be 'signed' or 'empty', got {self.reversed_intervals!r}")

    def with_(self, **changes) -> "DynamicsConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class FirstOrderState:
    """Raw iterate: generator coordinates in their own order plus four free endpoints."""

    model: tuple[float, float]
    endpoints: EndpointVector

    def __post_init__(self):
        object.__setattr__(self, "model", tuple(float(v) for v in self.model))
        object.__setattr__(self, "endpoints", EndpointVector(*(float(v) for v in self.endpoints)))


@dataclass(frozen=True)
class Trajectory:
    """Per-iterate record; row 0 is the initial state."""

    mu: np.ndarray  # (n, 2)
    endpoints: np.ndarray  # (n, 4); the oracle witness for optimal variants
    loss: np.ndarray  # (n,)
    tv: np.ndarray  # (n,)
    status: Status
    variant: Variant
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("mu", "endpoints", "loss", "tv"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.mu.shape[0]

    @property
    def widths(self) -> np.ndarray:
        """Interval widths ``r_i - l_i`` per iterate, (n, 2)."""
        with np.errstate(invalid="ignore"):
            return self.endpoints[:, 1::2] - self.endpoints[:, 0::2]


# ---------------------------------------------------------------------------
# kernels (array form)
# ---------------------------------------------------------------------------


def _first_order_grads(target, mu, ends, mode, absolute):
    terms = _Terms(target, mu, ends)
    wts = ROLE * interval_weights(ends, mode)
    g_mu = _gen_grad(terms, interval_weights(ends, mode))
    d_ends = wts * terms.gap_density
    if absolute:
        s = gap_sign(target, mu, ends, mode)[..., None]
        g_mu = g_mu * s
        d_ends = d_ends * s
    return g_mu, d_ends


def _advance_ends(ends, d_ends, eta_d):
    with np.errstate(invalid="ignore"):
        new = ends + eta_d * d_ends
    return np.where(np.isfinite(ends), new, ends)


def _optimal_kernel(target, mu, absolute):
    witness = optimal_endpoints_batch(target, mu)
    terms = _Terms(target, mu, witness)
    g_mu = _gen_grad(terms, np.ones(witness.shape))
    if absolute:
        g_mu = g_mu * gap_sign(target, mu, witness, "signed")[..., None]
    return witness, g_mu


def _step_arrays(target, mu, ends, cfg: DynamicsConfig):
    """One step for every row; returns (mu', ends', witness-or-None)."""
    v = cfg.variant
    if v.uses_oracle:
        witness, g_mu = _optimal_kernel(target, mu, v.absolute)
        return mu - cfg.eta_g * g_mu, ends, witness
    mode = cfg.reversed_intervals
    g_mu, d_ends = _first_order_grads(target, mu, ends, mode, v.absolute)
    if v.unrolled and cfg.unroll_k > 0:
        g_mu = np.asarray(
            unrolled_generator_grad(
                target, mu, ends, cfg.unroll_k, cfg.eta_d, mode, v.absolute, cfg.unroll_differentiate
            )
        )
    return mu - cfg.eta_g * g_mu, _advance_ends(ends, d_ends, cfg.eta_d), None


# ---------------------------------------------------------------------------
# single-step public API
# ---------------------------------------------------------------------------


def step_optimal(target: MeansLike, model: Sequence[float], eta_g: float, absolute: bool = False):
    """Generator step against the best-response discriminator; returns the new raw pair."""
    t = as_params(target).as_array()
    mu = np.asarray(tuple(model), dtype=float)[None, :]
    _, g = _optimal_kernel(t, mu, absolute)
    new = mu - eta_g * g
    return float(new[0, 0]), float(new[0, 1])


def _state_arrays(state: FirstOrderState):
    return np.asarray(state.model, dtype=float)[None, :], np.asarray(state.endpoints, dtype=float)[None, :]


def step_first_order(
    target: MeansLike,
    state: FirstOrderState,
    eta_g: float,
    eta_d: float,
    reversed_intervals: str = "empty",
    absolute: bool = False,
) -> FirstOrderState:
    """Simultaneous descent/ascent; all gradients taken at the old state."""
    _check_mode(reversed_intervals)
    t = as_params(target).as_array()
    mu, ends = _state_arrays(state)
    g_mu, d_ends = _first_order_grads(t, mu, ends, reversed_intervals, absolute)
    new_mu = mu - eta_g * g_mu
    new_ends = _advance_ends(ends, d_ends, eta_d)
    return FirstOrderState(tuple(new_mu[0]), EndpointVector(*new_ends[0]))


def step_unrolled(
    target: MeansLike,
    state: FirstOrderState,
    eta_g: float,
    eta_d: float,
    k: int,
    reversed_intervals: str = "empty",
    absolute: bool = False,
    differentiate: bool = True,
) -> FirstOrderState:
    """Generator sees a ``k``-step lookahead discriminator; the stored one takes one plain step."""
    if k < 0:
        raise ValueError("unroll depth k must be >= 0")
    cfg = DynamicsConfig(
        variant=Variant.UNROLLED_ABS if absolute else Variant.UNROLLED,
        eta_g=eta_g,
        eta_d=eta_d,
        unroll_k=k,
        reversed_intervals=reversed_intervals,
        unroll_differentiate=differentiate,
    )
    t = as_params(target).as_array()
    mu, ends = _state_arrays(state)
    new_mu, new_ends, _ = _step_arrays(t, mu, ends, cfg)
    return FirstOrderState(tuple(new_mu[0]), EndpointVector(*new_ends[0]))


# ---------------------------------------------------------------------------
# batch engine
# ---------------------------------------------------------------------------


class _NoiseStreams:
    """Independent per-run Gaussian streams, drawn in fixed-size blocks."""

    def __init__(self, seeds, sigma):
        self.sigma = sigma
        self.rngs = [np.random.default_rng(s) for s in seeds]
        self.block = None
        self.pos = NOISE_BLOCK

    def draw(self, rows):
        if self.pos == NOISE_BLOCK:
            self.block = np.stack([r.standard_normal((NOISE_BLOCK, 2)) for r in self.rngs], axis=1)
            self.pos = 0
        out = self.block[self.pos]
        self.pos += 1
        return self.sigma * out[rows]


@dataclass
class BatchResult:
    mu: np.ndarray
    endpoints: np.ndarray
    tv: np.ndarray
    status: list
    steps: np.ndarray  # iterations actually taken per run
    min_separation: np.ndarray
    max_abs_coord: np.ndarray
    history: Optional[dict] = None


def _classify(cfg, mu, ends, tv, diverged):
    eps = cfg.collapse_eps
    code = np.full(mu.shape[0], _CODE[Status.BUDGET])
    code = np.where(tv <= cfg.success_tv, _CODE[Status.CONVERGED], code)
    code = np.where(np.abs(mu[:, 0] - mu[:, 1]) < eps, _CODE[Status.MODE_COLLAPSED], code)
    if not cfg.variant.uses_oracle:
        with np.errstate(invalid="ignore"):
            w = ends[:, 1::2] - ends[:, 0::2]
        code = np.where(np.all(w < eps, axis=1), _CODE[Status.DISC_COLLAPSED], code)
    code = np.where(diverged, _CODE[Status.DIVERGED], code)
    return [_STATUS_CODES[c] for c in code]


def _tv_rows(target, mu):
    target = np.broadcast_to(target, mu.shape)
    finite = np.all(np.isfinite(mu), axis=1)
    out = np.full(mu.shape[0], np.nan)
    if finite.any():
        out[finite] = tv_batch(target[finite], mu[finite])
    return out


def _target_rows(target, n):
    """Canonical (sorted) target per run, (n, 2)."""
    arr = np.asarray(target, dtype=float) if isinstance(target, np.ndarray) else None
    if arr is not None and arr.ndim == 2:
        if arr.shape != (n, 2):
            raise InvalidConfig(f"per-run targets must have shape ({n}, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidConfig("targets must be finite")
        return np.sort(arr, axis=1)
    return np.broadcast_to(as_params(target).as_array(), (n, 2))


def simulate(
    target: MeansLike,
    mu0,
    ends0,
    cfg: DynamicsConfig,
    seeds: Optional[Sequence] = None,
    record: bool = False,
) -> BatchResult:
    """Iterate up to ``cfg.iterations`` steps for N runs at once.

    ``target`` is one mixture or an (N, 2) array with a target per run.
    ``mu0`` is (N, 2) raw generator coordinates, ``ends0`` (N, 4) endpoints
    (ignored by oracle variants). A run that leaves the divergence box is
    frozen there; with ``stop_on_converge`` an oracle run is frozen at the
    first iterate whose TV meets the threshold. ``record`` (single run only)
    keeps every visited state.
    """
    mu = np.array(mu0, dtype=float, ndmin=2)
    n = mu.shape[0]
    t = _target_rows(target, n)
    if record and n != 1:
        raise ValueError("recording is only supported for a single run")
    if ends0 is None:
        ends = np.full((n, 4), np.inf)
    else:
        ends = np.array(np.broadcast_to(np.asarray(ends0, dtype=float), (n, 4)))
    if seeds is None:
        seeds = [np.random.SeedSequence([cfg.seed, i]) for i in range(n)]
    noise = _NoiseStreams(seeds, cfg.noise_sigma) if cfg.noise_sigma > 0 else None
    oracle = cfg.variant.uses_oracle

    active = np.ones(n, dtype=bool)
    diverged = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=int)
    min_sep = np.abs(mu[:, 0] - mu[:, 1])
    max_abs = np.max(np.abs(mu), axis=1)
    hist = {"mu": [], "ends": [], "loss": [], "tv": []} if record else None
    last_tv: list = []

    def note(m, e, witness):
        if oracle:
            if witness is None:
                witness = optimal_endpoints_batch(t, m)
            tv_now = np.clip(signed_mass_batch(t, m, witness), 0.0, 1.0)
            hist["ends"].append(witness[0].copy())
            hist["loss"].append(1.0 + tv_now[0])
        else:
            # a frozen generator (collapsed discriminator) repeats the last TV exactly
            if last_tv and np.array_equal(last_tv[0], m):
                tv_now = last_tv[1]
            else:
                tv_now = _tv_rows(t, m)
                last_tv[:] = [m.copy(), tv_now]
            hist["ends"].append(e[0].copy())
            hist["loss"].append(1.0 + float(mass_gap(t, m, e, cfg.reversed_intervals)[0]))
        hist["mu"].append(m[0].copy())
        hist["tv"].append(float(tv_now[0]))

    final_recorded = False
    for _ in range(cfg.iterations):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        t_rows, m_rows, e_rows = t[rows], mu[rows], ends[rows]
        new_mu, new_ends, witness = _step_arrays(t_rows, m_rows, e_rows, cfg)
        if record:
            note(m_rows, e_rows, witness)
        if oracle and cfg.stop_on_converge:
            hit = np.clip(signed_mass_batch(t_rows, m_rows, witness), 0.0, 1.0) <= cfg.success_tv
            if hit.any():
                active[rows[hit]] = False
                keep = ~hit
                rows, new_mu, new_ends = rows[keep], new_mu[keep], new_ends[keep]
                if rows.size == 0:
                    final_recorded = record
                    break
        if noise is not None:
            new_mu = new_mu + noise.draw(rows)
        mu[rows] = new_mu
        ends[rows] = new_ends
        steps[rows] += 1
        min_sep[rows] = np.minimum(min_sep[rows], np.abs(new_mu[:, 0] - new_mu[:, 1]))
        max_abs[rows] = np.maximum(max_abs[rows], np.max(np.abs(new_mu), axis=1))
        bad = ~np.all(np.isfinite(new_mu), axis=1) | np.any(np.abs(new_mu) > cfg.divergence_bound, axis=1)
        if bad.any():
            diverged[rows[bad]] = True
            active[rows[bad]] = False

    if record and not final_recorded:
        if np.all(np.isfinite(mu)):
            note(mu, ends, None)
        else:
            hist["mu"].append(mu[0].copy())
            hist["ends"].append(ends[0].copy())
            hist["loss"].append(np.nan)
            hist["tv"].append(np.nan)
    final_tv = _tv_rows(t, mu)
    status = _classify(cfg, mu, ends, np.nan_to_num(final_tv, nan=np.inf), diverged)
    if record:
        hist = {k: np.array(v) for k, v in hist.items()}
    return BatchResult(mu, ends, final_tv, status, steps, min_sep, max_abs, hist)


def run(target: MeansLike, init: Union[FirstOrderState, Sequence[float]], config: DynamicsConfig) -> Trajectory:
    """Run one dynamics from ``init`` and record every iterate."""
    if not isinstance(config, DynamicsConfig):
        raise InvalidConfig("config must be a DynamicsConfig")
    if isinstance(init, FirstOrderState):
        mu0, ends0 = init.model, [tuple(init.endpoints)]
    else:
        if not config.variant.uses_oracle:
            raise InvalidConfig(f"variant {config.variant.value} needs initial discriminator endpoints")
        mu0, ends0 = tuple(init), None
    res = simulate(target, [mu0], ends0, config, record=True)
    h = res.history
    meta = {"target": tuple(as_params(target)), "steps": int(res.steps[0])}
    return Trajectory(h["mu"], h["ends"], h["loss"], h["tv"], res.status[0], config.variant, meta)
