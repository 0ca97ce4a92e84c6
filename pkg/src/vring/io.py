"""Files written and read by the command line front-end.

solution.json
    {"params": {kappa, W, eps}, "core": {z1, s, a, mu, n_grad}, "mu",
    "kappa_measured", "iterations", "final_update", "mode",
    "contraction_ratio", "center": [r, z], "nodes": [[theta, radius], ...],
    "history": [...]}. Floats are written with repr, so reading returns the
    same doubles.
boundary.csv
    theta, radius, r, z for every node of a star-shaped curve.
sweep.csv
    eps, z1, s, sigma, kappa, kh_residual, star_norm, sym_diff, poho_gap.
trace.csv
    t, metric, circulation, impulse, energy, area, volume.
ascent.csv
    iter, energy, impulse, augmented, mu, mass, sym_diff_step.
report.json
    free-form summary of a run.

CSV files carry one header line and decimal floats with 17 significant
digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .ansatz import CoreAnsatz, RingParameters
from .errors import ConfigError, OutputError
from .freeboundary import BoundaryCurve, SteadyRingSolution
from .kernel import HalfPlanePoint

SWEEP_COLUMNS = ("eps", "z1", "s", "sigma", "kappa", "kh_residual", "star_norm", "sym_diff", "poho_gap")
TRACE_COLUMNS = ("t", "metric", "circulation", "impulse", "energy", "area", "volume")
ASCENT_COLUMNS = ("iter", "energy", "impulse", "augmented", "mu", "mass", "sym_diff_step")
BOUNDARY_COLUMNS = ("theta", "radius", "r", "z")


def format_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, columns, rows) -> Path:
    """Rows are mappings or sequences in column order."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                vals = [row[c] for c in columns] if isinstance(row, dict) else list(row)
                if len(vals) != len(columns):
                    raise ValueError(f"row has {len(vals)} fields, expected {len(columns)}")
                w.writerow([format_number(v) for v in vals])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> dict:
    """Columns of a CSV written by ``write_csv`` as float arrays."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise ConfigError(f"{path} is not a numeric table: {exc}") from exc
    return {name: data[:, i] for i, name in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# steady solutions


def solution_to_dict(sol: SteadyRingSolution) -> dict:
    p, c, curve = sol.params, sol.core, sol.curve
    return {
        "params": {"kappa": p.kappa, "W": p.W, "eps": p.eps},
        "core": {"z1": c.z1, "s": c.s, "a": c.a, "mu": c.mu, "n_grad": c.n_grad},
        "mu": sol.mu_used,
        "kappa_measured": sol.kappa_measured,
        "iterations": sol.iterations,
        "final_update": sol.final_update,
        "mode": sol.mode,
        "contraction_ratio": sol.contraction_ratio,
        "center": [curve.center.r, curve.center.z],
        "nodes": [[float(t), float(r)] for t, r in zip(curve.thetas, curve.radii)],
        "history": [float(h) for h in sol.history],
    }


def solution_from_dict(d: dict) -> SteadyRingSolution:
    try:
        params = RingParameters(**{k: float(d["params"][k]) for k in ("kappa", "W", "eps")})
        core = CoreAnsatz(**{k: float(d["core"][k]) for k in ("z1", "s", "a", "mu", "n_grad")})
        nodes = np.asarray(d["nodes"], dtype=float)
        center = HalfPlanePoint(float(d["center"][0]), float(d["center"][1]))
        curve = BoundaryCurve(center, nodes[:, 0], nodes[:, 1])
        ratio = d.get("contraction_ratio")
        return SteadyRingSolution(
            params=params, core=core, curve=curve, kappa_measured=float(d["kappa_measured"]),
            mu_used=float(d["mu"]), iterations=int(d["iterations"]), final_update=float(d["final_update"]),
            mode=str(d.get("mode", "fixed_kappa")), history=[float(h) for h in d.get("history", [])],
            contraction_ratio=float("nan") if ratio is None else float(ratio))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"malformed solution record: {exc}") from exc


def write_solution(path, sol: SteadyRingSolution) -> Path:
    return write_json(path, solution_to_dict(sol))


def read_solution(path) -> SteadyRingSolution:
    return solution_from_dict(read_json(path))


def write_boundary(path, curve: BoundaryCurve) -> Path:
    r, z = curve.points()
    return write_csv(path, BOUNDARY_COLUMNS, zip(curve.thetas, curve.radii, r, z))


def read_boundary(path) -> BoundaryCurve:
    cols = read_csv(path)
    try:
        th, rad, r, z = (cols[c] for c in BOUNDARY_COLUMNS)
    except KeyError as exc:
        raise ConfigError(f"boundary file lacks column {exc}") from exc
    center = (float(np.mean(r - rad * np.cos(th))), float(np.mean(z - rad * np.sin(th))))
    return BoundaryCurve(HalfPlanePoint(*center), th, rad)
