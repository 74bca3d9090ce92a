"""Reading and writing experiment outputs.

Every file starts with ``# key=value`` comment lines echoing the configuration
that produced it, so results can be interpreted without the command line.
Floats are written with ``repr`` (shortest round-trip form; ``inf``/``-inf``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from .. import __version__
from ..dynamics import Trajectory

TRAJECTORY_COLUMNS = ["iter", "mu_hat_1", "mu_hat_2", "l1", "r1", "l2", "r2", "loss", "tv"]
HEATMAP_COLUMNS = [
    "mu1_init",
    "mu2_init",
    "success_prob",
    "n_converged",
    "n_diverged",
    "n_mode_collapsed",
    "n_disc_collapsed",
    "n_budget",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (tuple, list)):
        return "(" + ",".join(fmt(v) for v in x) + ")"
    return str(x)


def _header_lines(kind: str, meta: Mapping) -> list[str]:
    lines = [f"# kind={kind}", f"# tool=gmmgan {__version__}"]
    for key, value in meta.items():
        lines.append(f"# {key}={fmt(value)}")
    return lines


def trajectory_to_csv(traj: Trajectory, meta: Mapping = ()) -> str:
    buf = io.StringIO()
    for line in _header_lines("trajectory", dict(meta)):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for i in range(len(traj)):
        row = [str(i), *map(fmt, traj.mu[i]), *map(fmt, traj.endpoints[i]), fmt(traj.loss[i]), fmt(traj.tv[i])]
        w.writerow(row)
    return buf.getvalue()


def heatmap_to_csv(result, meta: Mapping = ()) -> str:
    buf = io.StringIO()
    for line in _header_lines("heatmap", dict(meta)):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEATMAP_COLUMNS)
    axis = result.axis
    c = result.counts
    for i in range(len(axis)):
        for j in range(len(axis)):
            w.writerow(
                [
                    fmt(axis[i]),
                    fmt(axis[j]),
                    fmt(float(result.success[i, j])),
                    fmt(c["converged"][i, j]),
                    fmt(c["diverged"][i, j]),
                    fmt(c["mode-collapsed"][i, j]),
                    fmt(c["discriminator-collapsed"][i, j]),
                    fmt(c["iteration-budget-exhausted"][i, j]),
                ]
            )
    return buf.getvalue()


def summary_to_json(summary: Mapping) -> str:
    payload = {"kind": "theorem1", "tool": f"gmmgan {__version__}", **summary}
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _jsonable(v):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def read_table(path):
    """Parse one of our CSV files into (meta dict, column dict of float arrays)."""
    meta: dict[str, str] = {}
    body: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValueError(f"{path}: no table found")
    header, data = rows[0], rows[1:]
    cols = {name: np.array([float(r[k]) for r in data]) for k, name in enumerate(header)}
    return meta, cols
