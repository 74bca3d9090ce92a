"""The two-interval GAN loss and its exact derivatives.

    L(mu, l, r) = 1 + sum_i [G_target([l_i, r_i]) - G_model([l_i, r_i])]

with properly normalised (weight 1/2) mixtures, so that at the best-response
discriminator ``L - 1`` is exactly the TV distance.  All functions broadcast:
``model`` may be (..., 2) and endpoints (..., 4) ordered ``(l1, r1, l2, r2)``.

Intervals with ``r < l`` are handled according to ``reversed_intervals``:

* ``"signed"`` -- signed integral, i.e. negated mass (smooth everywhere);
* ``"empty"``  -- indicator semantics, a reversed interval is the empty set and
  carries neither mass nor gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import ZeroGap
from .gaussmix import INV_SQRT_2PI

# +1 for right endpoints, -1 for left endpoints, in (l1, r1, l2, r2) order
ROLE = np.array([-1.0, 1.0, -1.0, 1.0])

ZERO_GAP_EPS = 1e-15
REVERSED_MODES = ("signed", "empty")


class EndpointVector(NamedTuple):
    l1: float
    r1: float
    l2: float
    r2: float


@dataclass(frozen=True)
class LossGradients:
    d_mu: tuple[float, float]
    d_l: tuple[float, float]
    d_r: tuple[float, float]

    def as_array(self) -> np.ndarray:
        """Flat ``(d_mu1, d_mu2, d_l1, d_r1, d_l2, d_r2)``."""
        return np.array([*self.d_mu, self.d_l[0], self.d_r[0], self.d_l[1], self.d_r[1]])


def _check_mode(mode: str):
    if mode not in REVERSED_MODES:
        raise ValueError(f"reversed_intervals must be one of {REVERSED_MODES}, got {mode!r}")


def _phi(z):
    # exp(-inf) == 0 so infinite endpoints drop out on their own
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def _arrays(target, model, ends):
    t = np.asarray(tuple(target) if not isinstance(target, np.ndarray) else target, dtype=float)
    g = np.asarray(tuple(model) if not isinstance(model, np.ndarray) else model, dtype=float)
    e = np.asarray(tuple(ends) if not isinstance(ends, np.ndarray) else ends, dtype=float)
    return t, g, e


def interval_weights(ends, mode: str = "signed"):
    """Per-endpoint multiplier (..., 4): 1, or 0 for endpoints of a reversed interval in ``empty`` mode."""
    _check_mode(mode)
    ends = np.asarray(ends, dtype=float)
    if mode == "signed":
        return np.ones(ends.shape)
    alive = ends[..., 1::2] > ends[..., 0::2]
    return np.repeat(alive, 2, axis=-1).astype(float)


class _Terms:
    """Gaussian evaluations shared by the value, gradient and Hessian blocks."""

    def __init__(self, target, model, ends):
        self.t, self.g, self.e = _arrays(target, model, ends)
        x = self.e[..., :, None]
        self.dm = x - self.g[..., None, :]  # (..., 4, 2) endpoint minus generator mean
        self.dt = x - self.t[..., None, :]
        self.pm = _phi(self.dm)
        self.pt = _phi(self.dt)

    @property
    def gap_density(self):
        """F at each endpoint, (..., 4)."""
        return 0.5 * (np.sum(self.pt, axis=-1) - np.sum(self.pm, axis=-1))

    @property
    def gap_density_slope(self):
        """F' at each endpoint, zero at infinite endpoints."""
        with np.errstate(invalid="ignore"):
            s = 0.5 * (np.sum(-self.dt * self.pt, axis=-1) - np.sum(-self.dm * self.pm, axis=-1))
        return np.where(np.isfinite(self.e), s, 0.0)

    @property
    def mixed(self):
        """dF(x_e)/dmu_j = -(1/2)(x_e - mu_j) phi(x_e - mu_j), (..., 4, 2)."""
        with np.errstate(invalid="ignore"):
            v = -0.5 * self.dm * self.pm
        return np.where(np.isfinite(self.dm), v, 0.0)


def _gen_grad(terms: _Terms, wts):
    # 1/2 * sum_i [phi(r_i - mu_j) - phi(l_i - mu_j)]
    return 0.5 * np.sum((ROLE * wts)[..., :, None] * terms.pm, axis=-2)


def _mass_gap(target, model, ends, mode):
    t, g, e = _arrays(target, model, ends)
    lo = e[..., 0::2, None]
    hi = e[..., 1::2, None]
    tt = t[..., None, :]
    gg = g[..., None, :]
    with np.errstate(invalid="ignore"):
        per = 0.5 * np.sum((ndtr(hi - tt) - ndtr(lo - tt)) - (ndtr(hi - gg) - ndtr(lo - gg)), axis=-1)
    per = np.nan_to_num(per, nan=0.0)
    if mode == "empty":
        per = np.where(e[..., 1::2] > e[..., 0::2], per, 0.0)
    return np.sum(per, axis=-1)


def mass_gap(target, model, ends, reversed_intervals: str = "signed"):
    """``L - 1``: signed mass difference of target over model on the two intervals."""
    _check_mode(reversed_intervals)
    out = _mass_gap(target, model, ends, reversed_intervals)
    return float(out) if np.ndim(out) == 0 else out


def loss_value(target, model, ends, reversed_intervals: str = "signed"):
    """GAN objective ``E_target[D] + E_model[1 - D]`` for the two-interval discriminator."""
    _check_mode(reversed_intervals)
    out = 1.0 + _mass_gap(target, model, ends, reversed_intervals)
    return float(out) if np.ndim(out) == 0 else out


def grad_generator(target, model, ends, reversed_intervals: str = "signed"):
    """dL/dmu_j for each (unsorted) generator coordinate."""
    terms = _Terms(target, model, ends)
    out = _gen_grad(terms, interval_weights(terms.e, reversed_intervals))
    return out if out.ndim > 1 else (float(out[0]), float(out[1]))


def grad_discriminator(target, model, ends, reversed_intervals: str = "signed"):
    """``(dL/dl, dL/dr)``: dL/dr_i = F(r_i), dL/dl_i = -F(l_i)."""
    terms = _Terms(target, model, ends)
    d = ROLE * interval_weights(terms.e, reversed_intervals) * terms.gap_density
    if d.ndim > 1:
        return d[..., 0::2], d[..., 1::2]
    return (float(d[0]), float(d[2])), (float(d[1]), float(d[3]))


def gradients(target, model, ends, reversed_intervals: str = "signed") -> LossGradients:
    (dl, dr) = grad_discriminator(target, model, ends, reversed_intervals)
    return LossGradients(grad_generator(target, model, ends, reversed_intervals), dl, dr)


def gap_sign(target, model, ends, reversed_intervals: str = "signed"):
    """sgn(L - 1) rowwise, 0 where the gap is below ``ZERO_GAP_EPS`` in magnitude."""
    gap = _mass_gap(target, model, ends, reversed_intervals)
    return np.where(np.abs(gap) < ZERO_GAP_EPS, 0.0, np.sign(gap))


def abs_gradients(target, model, ends, reversed_intervals: str = "signed") -> LossGradients:
    """Subgradients of ``|L - 1|``: the plain gradients times the sign of the mass gap."""
    _check_mode(reversed_intervals)
    gap = float(_mass_gap(target, model, ends, reversed_intervals))
    if abs(gap) < ZERO_GAP_EPS:
        raise ZeroGap(f"mass gap {gap!r} too close to zero for a sign")
    s = 1.0 if gap > 0 else -1.0
    g = gradients(target, model, ends, reversed_intervals)
    return LossGradients(
        tuple(s * v for v in g.d_mu),  # type: ignore[arg-type]
        tuple(s * v for v in g.d_l),  # type: ignore[arg-type]
        tuple(s * v for v in g.d_r),  # type: ignore[arg-type]
    )


def discriminator_ascent(target, model, ends, eta_d, reversed_intervals="signed", absolute=False):
    """One ascent step on the endpoints (array form, (..., 4))."""
    terms = _Terms(target, model, ends)
    wts = interval_weights(terms.e, reversed_intervals)
    step = ROLE * wts * terms.gap_density
    if absolute:
        step = step * gap_sign(target, model, terms.e, reversed_intervals)[..., None]
    with np.errstate(invalid="ignore"):
        new = terms.e + eta_d * step
    return np.where(np.isfinite(terms.e), new, terms.e)


def unrolled_generator_grad(
    target,
    model,
    ends,
    k: int,
    eta_d: float,
    reversed_intervals: str = "signed",
    absolute: bool = False,
    differentiate: bool = True,
):
    """Generator gradient through ``k`` lookahead discriminator ascent steps.

    With ``differentiate`` the Jacobian dD_t/dmu (4 x 2) is carried forward
    through every step using the closed-form blocks

        d^2 L / dx_e^2      = role_e F'(x_e)        (diagonal)
        d^2 L / dx_e dmu_j  = role_e dF(x_e)/dmu_j

    and the chain rule is applied at ``D_k``. Without it this is the plain
    generator gradient at ``D_k`` (lookahead only). ``absolute`` uses the
    ``|L - 1|`` dynamics for both the lookahead and the final gradient.
    """
    if k < 0:
        raise ValueError("unroll depth k must be >= 0")
    _check_mode(reversed_intervals)
    t, g, e = _arrays(target, model, ends)
    if k == 0:
        terms = _Terms(t, g, e)
        out = _gen_grad(terms, interval_weights(e, reversed_intervals))
        if absolute:
            out = out * gap_sign(t, g, e, reversed_intervals)[..., None]
        return out if out.ndim > 1 else (float(out[0]), float(out[1]))

    jac = np.zeros(e.shape + (2,))
    for _ in range(k):
        terms = _Terms(t, g, e)
        wts = ROLE * interval_weights(e, reversed_intervals)
        if absolute:
            wts = wts * gap_sign(t, g, e, reversed_intervals)[..., None]
        finite = np.isfinite(e)
        if differentiate:
            diag = 1.0 + eta_d * wts * terms.gap_density_slope
            jac = diag[..., None] * jac + eta_d * wts[..., None] * terms.mixed
        with np.errstate(invalid="ignore"):
            e = np.where(finite, e + eta_d * wts * terms.gap_density, e)
    terms = _Terms(t, g, e)
    wts = ROLE * interval_weights(e, reversed_intervals)
    out = 0.5 * np.sum(wts[..., :, None] * terms.pm, axis=-2)
    if differentiate:
        d_ends = wts * terms.gap_density
        out = out + np.sum(jac * d_ends[..., None], axis=-2)
    if absolute:
        out = out * gap_sign(t, g, e, reversed_intervals)[..., None]
    return out if out.ndim > 1 else (float(out[0]), float(out[1]))
