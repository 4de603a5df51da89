"""Plain-text file formats for patterns, posterior draws and summaries."""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .inference.mcmc import PosteriorSamples
from .models import ModelKind
from .pattern import PointPattern, Window

__all__ = [
    "PatternFormatError",
    "read_pattern",
    "write_pattern",
    "format_float",
    "write_posterior_csv",
    "read_posterior_csv",
    "summary_document",
    "validate_summary",
    "dump_json",
]


class PatternFormatError(ValueError):
    pass


def format_float(v: float) -> str:
    """17 significant digits: exact round trip for doubles."""
    return format(float(v), ".17g")


def read_pattern(path) -> PointPattern:
    """Read ``# window x_min x_max y_min y_max``, then ``x,y``, then one point per row."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise PatternFormatError(f"{path}:1: empty file")
    head = lines[0].split()
    if len(head) != 6 or head[:2] != ["#", "window"]:
        raise PatternFormatError(f"{path}:1: expected '# window x_min x_max y_min y_max'")
    try:
        w = Window(*(float(v) for v in head[2:]))
    except ValueError as e:
        raise PatternFormatError(f"{path}:1: {e}") from None
    if len(lines) < 2 or lines[1].replace(" ", "") != "x,y":
        raise PatternFormatError(f"{path}:2: expected header 'x,y'")
    pts = []
    for ln, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise PatternFormatError(f"{path}:{ln}: expected two comma-separated values")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise PatternFormatError(f"{path}:{ln}: not a number: {line.strip()!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise PatternFormatError(f"{path}:{ln}: non-finite coordinate")
        if not (w.x_min <= x <= w.x_max and w.y_min <= y <= w.y_max):
            raise PatternFormatError(f"{path}:{ln}: point ({x}, {y}) outside the window")
        pts.append((x, y))
    return PointPattern(np.array(pts, dtype=float).reshape(-1, 2), w)


def write_pattern(p: PointPattern, path) -> None:
    w = p.window
    out = ["# window " + " ".join(format_float(v) for v in w.as_tuple()), "x,y"]
    out += [f"{format_float(x)},{format_float(y)}" for x, y in p.points]
    Path(path).write_text("\n".join(out) + "\n")


def write_posterior_csv(s: PosteriorSamples, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([*s.param_names, "sim_count"])
        for row, c in zip(s.theta, s.sim_count):
            wr.writerow([*(format_float(v) for v in row), int(c)])


def read_posterior_csv(path, kind: ModelKind) -> PosteriorSamples:
    """Posterior draws written by :func:`write_posterior_csv`; chain diagnostics are not restored."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][:-1]) != kind.param_names or rows[0][-1] != "sim_count":
        raise ValueError(f"{path}: header does not match {kind.param_names} + sim_count")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(rows[0]))
    theta = data[:, :-1]
    return PosteriorSamples(
        kind, theta, data[:, -1].astype(np.int64), np.full(len(theta), math.nan), math.nan, 0, math.nan
    )


def summary_document(chains: list[PosteriorSamples], seed, config: dict) -> dict:
    """Posterior summary over all chains plus per-chain diagnostics and provenance."""
    first = chains[0]
    theta = np.vstack([c.theta for c in chains])
    n_pts = np.concatenate([c.n_points for c in chains])
    pooled = PosteriorSamples(first.kind, theta, np.concatenate([c.sim_count for c in chains]), n_pts,
                              float(np.mean([c.acceptance_rate for c in chains])),
                              sum(c.cap_events for c in chains), first.epsilon)
    return {
        "model": first.kind.name,
        "fixed": dict(first.kind.fixed),
        "prior": list(first.prior),
        "epsilon": first.epsilon if math.isfinite(first.epsilon) else None,
        "draws": int(len(theta)),
        "parameters": pooled.summary(),
        "chains": [
            {
                "acceptance_rate": c.acceptance_rate,
                "cap_events": int(c.cap_events),
                "mean_sim_count": float(np.mean(c.sim_count)),
            }
            for c in chains
        ],
        "seed": seed,
        "config": config,
    }


def _schema():
    return json.loads(resources.files("repulsive_abc.schemas").joinpath("summary.schema.json").read_text())


def validate_summary(doc: dict) -> None:
    jsonschema.validate(doc, _schema())


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")
