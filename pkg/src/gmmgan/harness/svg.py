"""Standalone SVG rendering for trajectory and heatmap tables (no plotting deps)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 720, 420
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 45

MU_COLORS = ("#1f77b4", "#d62728")
END_COLORS = ("#2ca02c", "#2ca02c", "#9467bd", "#9467bd")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _frame(title, x_lo, x_hi, y_lo, y_hi, xlabel, ylabel):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="14" font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{W - PAD_L - PAD_R}" height="{H - PAD_T - PAD_B}" fill="none" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        px = PAD_L + (tx - x_lo) / (x_hi - x_lo or 1) * (W - PAD_L - PAD_R)
        out.append(
            f'<text x="{_f(px)}" y="{H - PAD_B + 16}" text-anchor="middle" font-size="11" font-family="sans-serif">{tx:.3g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        py = H - PAD_B - (ty - y_lo) / (y_hi - y_lo or 1) * (H - PAD_T - PAD_B)
        out.append(
            f'<text x="{PAD_L - 6}" y="{_f(py + 4)}" text-anchor="end" font-size="11" font-family="sans-serif">{ty:.3g}</text>'
        )
    out.append(
        f'<text x="{W / 2:.1f}" y="{H - 8}" text-anchor="middle" font-size="12" font-family="sans-serif">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 14 {H / 2:.1f})">{escape(ylabel)}</text>'
    )
    return out


def trajectory_svg(meta: dict, cols: dict) -> str:
    """Generator means as solid lines, finite discriminator endpoints dotted."""
    it = cols["iter"]
    series = [cols["mu_hat_1"], cols["mu_hat_2"]]
    ends = [cols[k] for k in ("l1", "r1", "l2", "r2")]
    finite = np.concatenate([s[np.isfinite(s)] for s in series + ends])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 1.0)
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 1, y_hi + 1
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    x_lo, x_hi = float(it.min()), float(max(it.max(), it.min() + 1))

    def px(x):
        return PAD_L + (x - x_lo) / (x_hi - x_lo) * (W - PAD_L - PAD_R)

    def py(y):
        return H - PAD_B - (y - y_lo) / (y_hi - y_lo) * (H - PAD_T - PAD_B)

    def path(xs, ys):
        segs, cur = [], []
        for x, y in zip(xs, ys):
            if math.isfinite(y):
                cur.append(f"{_f(px(x))},{_f(py(y))}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        return " ".join("M" + " L".join(s) for s in segs)

    title = f"trajectory {meta.get('figure', '')}".strip()
    out = _frame(title, x_lo, x_hi, y_lo, y_hi, "iteration", "value")
    for s, c in zip(ends, END_COLORS):
        d = path(it, s)
        if d:
            out.append(f'<path d="{d}" fill="none" stroke="{c}" stroke-width="1" stroke-dasharray="3,3"/>')
    for s, c in zip(series, MU_COLORS):
        d = path(it, s)
        if d:
            out.append(f'<path d="{d}" fill="none" stroke="{c}" stroke-width="1.8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _shade(p: float) -> str:
    # white (0) to dark blue (1)
    p = min(max(p, 0.0), 1.0)
    r = int(round(255 - p * (255 - 8)))
    g = int(round(255 - p * (255 - 48)))
    b = int(round(255 - p * (255 - 107)))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(meta: dict, cols: dict) -> str:
    """Success-probability raster over the (mu1_init, mu2_init) grid."""
    xs = np.unique(cols["mu1_init"])
    ys = np.unique(cols["mu2_init"])
    nx, ny = len(xs), len(ys)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    title = f"success probability ({meta.get('variant', '')})"
    out = _frame(title, x_lo, x_hi, y_lo, y_hi, "mu_hat_1 init", "mu_hat_2 init")
    cw = (W - PAD_L - PAD_R) / nx
    ch = (H - PAD_T - PAD_B) / ny
    xi = {v: k for k, v in enumerate(xs)}
    yi = {v: k for k, v in enumerate(ys)}
    for a, b, p in zip(cols["mu1_init"], cols["mu2_init"], cols["success_prob"]):
        x = PAD_L + xi[a] * cw
        y = H - PAD_B - (yi[b] + 1) * ch
        out.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw + 0.3)}" height="{_f(ch + 0.3)}" fill="{_shade(float(p))}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(meta: dict, cols: dict) -> str:
    kind = meta.get("kind")
    if kind == "heatmap" or "success_prob" in cols:
        return heatmap_svg(meta, cols)
    if kind == "trajectory" or "mu_hat_1" in cols:
        return trajectory_svg(meta, cols)
    raise ValueError(f"cannot plot table of kind {kind!r}")
