"""Unit-variance, equal-weight two-component Gaussian mixtures on the real line.

Every generator (and the data distribution) is ``0.5 N(mu1, 1) + 0.5 N(mu2, 1)``.
Besides the density and CDF this module isolates the zeros of the signed gap

    F(x) = G_target(x) - G_model(x),

which is a four-term Gaussian sum and has at most three sign changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .errors import IdenticalParameters

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: half-width added around the extreme means when bracketing zeros
WINDOW_MARGIN = 15.0
DEFAULT_TOL = 1e-12

_MAX_BISECT = 400


@dataclass(frozen=True)
class MixtureParams:
    """Component means of a 1/2-1/2 unit-variance mixture, stored with ``mu1 <= mu2``."""

    mu1: float
    mu2: float

    def __post_init__(self):
        a, b = float(self.mu1), float(self.mu2)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"mixture means must be finite, got ({a}, {b})")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "mu1", a)
        object.__setattr__(self, "mu2", b)

    def __iter__(self) -> Iterator[float]:
        yield self.mu1
        yield self.mu2

    def as_array(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])

    @property
    def separation(self) -> float:
        return self.mu2 - self.mu1


MeansLike = Union[MixtureParams, Sequence[float], np.ndarray]


def as_params(p: MeansLike) -> MixtureParams:
    if isinstance(p, MixtureParams):
        return p
    a, b = p
    return MixtureParams(a, b)


@dataclass(frozen=True)
class ZeroSet:
    """Sign-change points of the density gap, strictly increasing, at most three."""

    zeros: tuple[float, ...]
    tolerance: float

    def __post_init__(self):
        if len(self.zeros) > 3:
            raise ValueError(f"a two-vs-two Gaussian gap has at most 3 zeros, got {len(self.zeros)}")
        if any(b <= a for a, b in zip(self.zeros, self.zeros[1:])):
            raise ValueError("zeros must be strictly increasing")

    def __len__(self) -> int:
        return len(self.zeros)

    def __iter__(self) -> Iterator[float]:
        return iter(self.zeros)


def std_normal_pdf(z):
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def mixture_pdf(params: MeansLike, x):
    """Density ``0.5 phi(x - mu1) + 0.5 phi(x - mu2)``; broadcasts over ``x``."""
    m1, m2 = params
    x = np.asarray(x, dtype=float)
    out = 0.5 * (std_normal_pdf(x - m1) + std_normal_pdf(x - m2))
    return float(out) if out.ndim == 0 else out


def mixture_cdf(params: MeansLike, x):
    """CDF ``0.5 Phi(x - mu1) + 0.5 Phi(x - mu2)``; ``x`` may be infinite."""
    m1, m2 = params
    x = np.asarray(x, dtype=float)
    out = 0.5 * (ndtr(x - m1) + ndtr(x - m2))
    return float(out) if out.ndim == 0 else out


def diff_pdf(target: MeansLike, model: MeansLike, x):
    """Signed density gap ``G_target(x) - G_model(x)``.

    Components are paired by rank so that coinciding means cancel exactly.
    """
    a1, a2 = sorted(target)
    b1, b2 = sorted(model)
    x = np.asarray(x, dtype=float)
    out = 0.5 * (
        (std_normal_pdf(x - a1) - std_normal_pdf(x - b1))
        + (std_normal_pdf(x - a2) - std_normal_pdf(x - b2))
    )
    return float(out) if out.ndim == 0 else out


def diff_pdf_deriv(target: MeansLike, model: MeansLike, x):
    """d/dx of :func:`diff_pdf`; zero at infinite ``x``."""
    a1, a2 = sorted(target)
    b1, b2 = sorted(model)
    x = np.asarray(x, dtype=float)

    def dphi(z):
        with np.errstate(invalid="ignore"):
            v = -z * std_normal_pdf(z)
        return np.where(np.isfinite(z), v, 0.0)

    out = 0.5 * ((dphi(x - a1) - dphi(x - b1)) + (dphi(x - a2) - dphi(x - b2)))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# zero isolation
#
# Multiplying F by exp(x^2/2 - m_j x) turns it into an exponential sum whose
# derivative is, up to the same positive factor, the Gaussian sum with weights
# w_k (m_k - m_j) over the means above m_j.  Zeros of that reduced sum split
# the line into pieces on which F has at most one sign change (Rolle), so the
# recursion 1 term -> 2 -> 3 -> 4 brackets every crossing, however close two
# crossings are to each other.
# ---------------------------------------------------------------------------


def _scaled_sum(x, weights, means, j):
    """Positive multiple of ``sum_{k>=j} w_k phi(x - m_k)`` that never underflows.

    ``x`` has shape (N, P); weights/means have shape (N, 4).
    """
    w = weights[:, None, j:]
    m = means[:, None, j:]
    expo = -0.5 * np.square(x[:, :, None] - m)
    live = w != 0.0
    expo_live = np.where(live, expo, -np.inf)
    top = np.max(expo_live, axis=2, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    return np.sum(np.where(live, w * np.exp(expo_live - top), 0.0), axis=2)


def _two_term_zero(weights, means, lo, hi):
    """Closed-form zero of ``u2 phi(x - m2) + u3 phi(x - m3)`` (level 2), or NaN."""
    u2, u3 = weights[:, 2], weights[:, 3]
    m2, m3 = means[:, 2], means[:, 3]
    ok = (u2 * u3 < 0) & (m3 > m2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = 0.5 * (m2 + m3) + np.log(-u2 / u3) / (m3 - m2)
    ok &= (z > lo) & (z < hi)
    return np.where(ok, z, np.nan)[:, None]


def _crossings(weights, means, j, lo, hi, breaks, tol):
    """Sign changes of the level-``j`` sum inside [lo, hi], one per monotone piece.

    Bracketing false position with the Illinois correction; every fourth
    iterate is a plain bisection so the bracket always shrinks geometrically.
    """
    if breaks.shape[1]:
        b = np.where(np.isnan(breaks), hi[:, None], np.clip(breaks, lo[:, None], hi[:, None]))
        b = np.sort(b, axis=1)
        left = np.concatenate([lo[:, None], b], axis=1)
        right = np.concatenate([b, hi[:, None]], axis=1)
    else:
        left, right = lo[:, None].copy(), hi[:, None].copy()
    fl = _scaled_sum(left, weights, means, j)
    fr = _scaled_sum(right, weights, means, j)
    active = np.sign(fl) * np.sign(fr) < 0
    roots = np.full(left.shape, np.nan)
    if not active.any():
        return roots
    rows = np.nonzero(active)[0]
    w, m = weights[rows], means[rows]
    a, b = left[active], right[active]
    fa, fb = fl[active], fr[active]
    side = np.zeros(a.shape, dtype=np.int8)
    for it in range(_MAX_BISECT):
        mid = 0.5 * (a + b)
        open_ = ((b - a) > tol) & (mid != a) & (mid != b)
        if not open_.any():
            break
        if it % 4 == 3:
            x = mid
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                x = (a * fb - b * fa) / (fb - fa)
            x = np.where((x > a) & (x < b), x, mid)
        x = np.where(open_, x, a)
        fx = _scaled_sum(x[:, None], w, m, j)[:, 0]
        hit = (fx == 0) & open_
        keep_b = (np.sign(fx) == np.sign(fa)) & open_ & ~hit
        keep_a = open_ & ~keep_b & ~hit
        # Illinois: halve the stale endpoint's value when the same side survives twice
        fb = np.where(keep_b & (side == 1), 0.5 * fb, fb)
        fa = np.where(keep_a & (side == -1), 0.5 * fa, fa)
        a = np.where(keep_b | hit, x, a)
        fa = np.where(keep_b, fx, fa)
        b = np.where(keep_a | hit, x, b)
        fb = np.where(keep_a, fx, fb)
        side = np.where(keep_b, 1, np.where(keep_a, -1, side)).astype(np.int8)
        # once the iterate has settled, test a tol-wide bracket around it directly
        settle = open_ & ~hit & ((b - a) > tol) & ((np.abs(x - a) < 0.25 * tol) | (np.abs(b - x) < 0.25 * tol))
        if settle.any():
            ta = np.where(settle, np.maximum(x - 0.5 * tol, a), a)
            tb = np.where(settle, np.minimum(x + 0.5 * tol, b), b)
            fta = _scaled_sum(ta[:, None], w, m, j)[:, 0]
            ftb = _scaled_sum(tb[:, None], w, m, j)[:, 0]
            good = settle & (np.sign(fta) * np.sign(ftb) < 0)
            a = np.where(good, ta, a)
            b = np.where(good, tb, b)
            fa = np.where(good, fta, fa)
            fb = np.where(good, ftb, fb)
    roots[active] = 0.5 * (a + b)
    return np.sort(roots, axis=1)


def _asymptotic_signs(weights, means):
    """Signs of F at -inf and +inf from the outermost means with nonzero net weight."""
    n = weights.shape[0]
    left = np.zeros(n)
    right = np.zeros(n)
    for row in range(n):
        net: dict[float, float] = {}
        for wk, mk in zip(weights[row], means[row]):
            net[mk] = net.get(mk, 0.0) + wk
        nz = [mk for mk in sorted(net) if net[mk] != 0.0]
        if nz:
            left[row] = np.sign(net[nz[0]])
            right[row] = np.sign(net[nz[-1]])
    return left, right


def find_zeros_batch(target, model, tol: float = DEFAULT_TOL):
    """Vectorised zero isolation of ``G_target - G_model``.

    ``target`` and ``model`` are (N, 2) arrays (or broadcastable pairs). Returns
    an (N, 3) array of zeros in increasing order padded with NaN, plus the sign
    of F on the leftmost region (0 when F vanishes identically).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = np.atleast_2d(np.asarray(target, dtype=float))
    g = np.atleast_2d(np.asarray(model, dtype=float))
    t, g = np.broadcast_arrays(t, g)
    n = t.shape[0]
    means = np.concatenate([t, g], axis=1)
    weights = np.tile(np.array([0.5, 0.5, -0.5, -0.5]), (n, 1))
    order = np.argsort(means, axis=1, kind="stable")
    means = np.take_along_axis(means, order, axis=1)
    weights = np.take_along_axis(weights, order, axis=1)

    levels = [weights]
    for j in range(3):
        nxt = levels[-1] * (means - means[:, j : j + 1])
        nxt[:, : j + 1] = 0.0
        levels.append(nxt)

    margin = np.full(n, WINDOW_MARGIN)
    asym_left = asym_right = None
    while True:
        lo = means[:, 0] - margin
        hi = means[:, 3] + margin
        breaks = _two_term_zero(levels[2], means, lo, hi)
        for j in (1, 0):
            breaks = _crossings(levels[j], means, j, lo, hi, breaks, tol)
        s_lo = np.sign(_scaled_sum(lo[:, None], weights, means, 0))[:, 0]
        s_hi = np.sign(_scaled_sum(hi[:, None], weights, means, 0))[:, 0]
        if asym_left is None:
            asym_left, asym_right = _asymptotic_signs(weights, means)
        bad = ((s_lo != asym_left) | (s_hi != asym_right)) & (asym_left != 0)
        if not bad.any() or margin.max() > 1e4:
            break
        margin = np.where(bad, 2.0 * margin, margin)
    return breaks, s_lo


def find_zeros(target: MeansLike, model: MeansLike, tol: float = DEFAULT_TOL) -> ZeroSet:
    """All sign changes of ``diff_pdf(target, model, .)``, each to within ``tol``."""
    t, g = as_params(target), as_params(model)
    if t == g:
        raise IdenticalParameters(f"target and model coincide at {tuple(t)}")
    zeros, _ = find_zeros_batch(t.as_array(), g.as_array(), tol)
    z = tuple(float(v) for v in zeros[0] if not np.isnan(v))
    return ZeroSet(z, tol)
