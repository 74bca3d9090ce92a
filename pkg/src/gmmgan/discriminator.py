"""Best-response discriminator and total variation distance.

For two mixtures the set ``{x : G_target(x) > G_model(x)}`` is a union of at
most two intervals, so the two-interval discriminator class attains the TV
distance exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import ndtr

from .errors import IdenticalParameters
from .gaussmix import DEFAULT_TOL, MeansLike, as_params, find_zeros_batch

INF = math.inf
# pairs closer than this may lose every sign change to rounding
COINCIDENT_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo == INF or hi == -INF:
            raise ValueError(f"degenerate infinite interval [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"interval lo > hi: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class DiscriminatorSet:
    """Union of at most two disjoint, sorted intervals."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(self.intervals)
        if len(ivs) > 2:
            raise ValueError(f"at most two intervals allowed, got {len(ivs)}")
        if len(ivs) == 2 and ivs[0].hi > ivs[1].lo:
            raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def endpoints(self) -> tuple[float, float, float, float]:
        """Flatten to ``(l1, r1, l2, r2)``; missing intervals become ``[inf, inf]``."""
        flat: list[float] = []
        for iv in self.intervals:
            flat += [iv.lo, iv.hi]
        while len(flat) < 4:
            flat.append(INF)
        return tuple(flat)  # type: ignore[return-value]

    @classmethod
    def from_endpoints(cls, ends) -> "DiscriminatorSet":
        l1, r1, l2, r2 = (float(v) for v in ends)
        ivs = [Interval(lo, hi) for lo, hi in ((l1, r1), (l2, r2)) if not (lo == hi == INF)]
        return cls(tuple(ivs))


def optimal_endpoints_batch(target, model, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Endpoints ``(l1, r1, l2, r2)`` of the positive region of ``G_target - G_model``.

    Rows are independent; absent intervals are ``[inf, inf]``. Rows where the
    two mixtures coincide come back as all ``inf`` (zero-mass, zero-gradient).
    So do rows that differ only at rounding level (means a few ulps apart),
    where the density gap is pure cancellation noise and has no resolvable
    sign change; their true TV is below 1e-13.
    """
    t = np.atleast_2d(np.asarray(target, dtype=float))
    g = np.atleast_2d(np.asarray(model, dtype=float))
    t, g = np.broadcast_arrays(t, g)
    zeros, s0 = find_zeros_batch(t, g, tol)
    n = zeros.shape[0]
    count = np.sum(~np.isnan(zeros), axis=1)
    gap = np.max(np.abs(np.sort(t, axis=1) - np.sort(g, axis=1)), axis=1)
    if np.any((count == 0) & (gap > COINCIDENT_TOL)):
        raise RuntimeError("density gap without sign change; cannot form a witness")
    same = (gap == 0) | (count == 0)
    bounds = np.concatenate(
        [np.full((n, 1), -INF), np.where(np.isnan(zeros), INF, zeros), np.full((n, 1), INF)], axis=1
    )
    # regions alternate in sign, so the positive ones are every other region
    ends = np.where((s0 > 0)[:, None], bounds[:, 0:4], bounds[:, 1:5])
    ends[same] = INF
    return ends


def optimal_discriminator(target: MeansLike, model: MeansLike) -> DiscriminatorSet:
    """Closure of ``{x : G_target(x) > G_model(x)}`` as at most two intervals."""
    t, g = as_params(target), as_params(model)
    if t == g:
        raise IdenticalParameters(f"no unique witness when target == model == {tuple(t)}")
    ends = optimal_endpoints_batch(t.as_array(), g.as_array())[0]
    return DiscriminatorSet.from_endpoints(ends)


def signed_mass_batch(target, model, ends) -> np.ndarray:
    """``sum_i G_target([l_i, r_i]) - G_model([l_i, r_i])`` rowwise, from CDFs."""
    t = np.asarray(target, dtype=float)[..., None, :]
    g = np.asarray(model, dtype=float)[..., None, :]
    ends = np.asarray(ends, dtype=float)
    lo = ends[..., 0::2, None]
    hi = ends[..., 1::2, None]
    gap = 0.5 * np.sum((ndtr(hi - t) - ndtr(lo - t)) - (ndtr(hi - g) - ndtr(lo - g)), axis=-1)
    return np.sum(gap, axis=-1)


def tv_batch(a, b, tol: float = DEFAULT_TOL) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    ends = optimal_endpoints_batch(a, b, tol)
    return np.clip(signed_mass_batch(a, b, ends), 0.0, 1.0)


def tv_distance(a: MeansLike, b: MeansLike) -> float:
    """Total variation distance between two mixtures (0 when they coincide)."""
    pa, pb = as_params(a), as_params(b)
    if pa == pb:
        return 0.0
    return float(tv_batch(pa.as_array(), pb.as_array())[0])


def single_gaussian_optimal(target_mean: float, model_mean: float) -> Interval:
    """Witness for two unit Gaussians: the half-line from the midpoint toward the target."""
    if target_mean == model_mean:
        raise IdenticalParameters("single-Gaussian witness undefined for equal means")
    mid = 0.5 * (target_mean + model_mean)
    if target_mean < model_mean:
        return Interval(-INF, mid)
    return Interval(mid, INF)
