"""Batch front-end: ``vring <command> [--config FILE] [--key value ...]``.

Settings are merged in the order built-in defaults, then the flat
``key = value`` config file, then command-line flags. Every run writes its
files into ``output_dir``; failures print a JSON error record on stderr and
exit with 2 (configuration), 3 (solver) or 4 (file I/O).

Sweeps run their points in a process pool sized by ``VRING_WORKERS``
(default 1); results are collected in input order and written by the parent,
so the files do not depend on the worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io
from .ansatz import RingParameters
from .diagnostics import (diagnose, fitted_order, kelvin_hicks_residual, normalized_spread, pohozaev_terms)
from .dynamics import PatchState, run_stability_experiment, turnover_time
from .errors import ConfigError, OutputError, RingError
from .freeboundary import BoundaryCurve, solve_steady
from .kernel import gstar, gstar_quadrature
from .variational import AdmissibleClassSpec, maximize, verify_energy_continuity_bound

log = logging.getLogger("vring")

COMMANDS = ("solve", "sweep", "kelvin-hicks", "pohozaev", "evolve", "maximize", "verify")
WORKERS_ENV = "VRING_WORKERS"


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


@dataclass
class RunConfig:
    command: str = "solve"
    kappa: float = 4.0 * np.pi
    W: float = 1.0
    eps: float = 0.05
    sweep_eps: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125])
    mode: str = "fixed_kappa"
    nodes: int = 256
    tol: float = 1e-10
    max_iter: int = 200
    delta: float = 0.0
    amplitude: float = 0.0
    perturbation_mode: int = 2
    turnovers: float = 20.0
    dt: float = 0.0
    output_every: int = 20
    ascent_mode: str = "mass"
    ascent_iter: int = 400
    samples: int = 1000
    pairs: int = 50
    seed: int = 0
    output_dir: str = "."

    def __post_init__(self):
        self.validate()

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.mode not in ("fixed_kappa", "fixed_mu"):
            raise ConfigError(f"mode must be fixed_kappa or fixed_mu, got {self.mode!r}")
        if self.ascent_mode not in ("mass", "impulse"):
            raise ConfigError(f"ascent_mode must be mass or impulse, got {self.ascent_mode!r}")
        eps = np.asarray(self.sweep_eps, dtype=float)
        if eps.size == 0 or np.any(np.diff(eps) >= 0.0):
            raise ConfigError("sweep_eps must be a non-empty, strictly decreasing list")
        for name in ("tol", "turnovers"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        for name in ("delta", "dt", "amplitude"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must not be negative")
        for name in ("nodes", "max_iter", "output_every", "ascent_iter", "samples", "pairs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        try:
            RingParameters(self.kappa, self.W, self.eps)
            for e in eps:
                RingParameters(self.kappa, self.W, float(e))
        except RingError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @property
    def params(self) -> RingParameters:
        return RingParameters(self.kappa, self.W, self.eps)

    def at(self, eps: float) -> RingParameters:
        return RingParameters(self.kappa, self.W, float(eps))

    @classmethod
    def merged(cls, command: str, file_values: dict, overrides: dict) -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for source in (file_values, overrides):
            for key, raw in source.items():
                key = key.replace("-", "_")
                if key not in types or key == "command":
                    raise ConfigError(f"unknown setting {key!r}")
                values[key] = _coerce(key, types[key], raw)
        return cls(command=command, **values)


def _coerce(key: str, typ: str, raw):
    try:
        if typ == "list":
            return _floats(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_file(path) -> dict:
    """Flat ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# workflows


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def _solve(cfg: RunConfig, eps: float | None = None):
    params = cfg.params if eps is None else cfg.at(eps)
    return solve_steady(params, cfg.mode, n=cfg.nodes, tol=cfg.tol, max_iter=cfg.max_iter)


def _solution_summary(sol) -> dict:
    return {
        "eps": sol.eps, "z1": sol.core.z1, "s": sol.core.s, "kappa_measured": sol.kappa_measured,
        "mu": sol.mu_used, "iterations": sol.iterations, "final_update": sol.final_update,
        "contraction_ratio": sol.contraction_ratio, "symmetry_defect": sol.curve.symmetry_defect(),
        "convex": bool(sol.curve.is_convex()),
    }


def run_solve(cfg: RunConfig) -> dict:
    sol = _solve(cfg)
    io.write_solution(_out(cfg, "solution.json"), sol)
    io.write_boundary(_out(cfg, "boundary.csv"), sol.curve)
    return {"solution": _solution_summary(sol), "files": ["solution.json", "boundary.csv"]}


def _sweep_point(args) -> dict:
    cfg, eps = args
    sol = _solve(cfg, eps)
    rep = diagnose(sol)
    return {"eps": eps, "z1": rep.z1, "s": rep.s, "sigma": rep.sigma, "kappa": rep.kappa,
            "kh_residual": rep.kelvin_hicks_residual, "star_norm": rep.residual_star_norm,
            "sym_diff": rep.sym_diff_area, "poho_gap": rep.poho_gap,
            "profile_error": rep.profile_error, "iterations": sol.iterations,
            "final_update": sol.final_update, "contraction_ratio": sol.contraction_ratio}


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return n


def _map_points(func, cfg: RunConfig, eps_list) -> list:
    jobs = [(cfg, float(e)) for e in eps_list]
    n = min(worker_count(), len(jobs))
    if n == 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, jobs))


def run_sweep(cfg: RunConfig) -> dict:
    rows = _map_points(_sweep_point, cfg, cfg.sweep_eps)
    io.write_csv(_out(cfg, "sweep.csv"), io.SWEEP_COLUMNS, rows)
    eps = np.array([r["eps"] for r in rows])
    kh = np.array([r["kh_residual"] for r in rows])
    logs = np.log(1.0 / eps)
    report = {"points": rows, "files": ["sweep.csv"]}
    if len(rows) > 1:
        report["fitted_order"] = {
            "kh_residual": fitted_order(eps, kh),
            "sym_diff": fitted_order(eps, [r["sym_diff"] for r in rows]),
            "star_norm": fitted_order(eps, [r["star_norm"] for r in rows]),
        }
        report["spread"] = {
            "kh_residual_over_eps2_log": normalized_spread(kh / (eps**2 * logs)),
            "sym_diff_over_eps4_log": normalized_spread([r["sym_diff"] for r in rows] / (eps**4 * logs)),
        }
    return report


def _kh_point(args) -> dict:
    cfg, eps = args
    sol = _solve(cfg, eps)
    res = kelvin_hicks_residual(sol)
    return {"eps": eps, "z1": sol.core.z1, "kh_residual": res,
            "kh_normalized": res / (eps * eps * np.log(1.0 / eps))}


def run_kelvin_hicks(cfg: RunConfig) -> dict:
    rows = _map_points(_kh_point, cfg, cfg.sweep_eps)
    cols = ("eps", "z1", "kh_residual", "kh_normalized")
    io.write_csv(_out(cfg, "kelvin_hicks.csv"), cols, rows)
    report = {"points": rows, "files": ["kelvin_hicks.csv"]}
    if len(rows) > 1:
        report["fitted_order"] = fitted_order([r["eps"] for r in rows], [r["kh_residual"] for r in rows])
        report["spread"] = normalized_spread([r["kh_normalized"] for r in rows])
    return report


POHOZAEV_COLUMNS = ("delta", "lhs", "rhs", "gap", "psi2_term", "w_term", "lhs_closed", "psi2_closed", "w_closed")


def run_pohozaev(cfg: RunConfig) -> dict:
    sol = _solve(cfg)
    z1, s = sol.core.z1, sol.core.s
    delta = cfg.delta if cfg.delta > 0.0 else min(10.0 * s, 0.25 * z1)
    rows = []
    for d in (delta, 2.0 * delta):
        t = pohozaev_terms(sol, d)
        rows.append({"delta": d, "lhs": t.lhs, "rhs": t.rhs, "gap": t.gap, "psi2_term": t.psi2_term,
                     "w_term": t.w_term, "lhs_closed": t.lhs_closed, "psi2_closed": t.psi2_closed,
                     "w_closed": t.w_closed})
    io.write_csv(_out(cfg, "pohozaev.csv"), POHOZAEV_COLUMNS, rows)
    return {"solution": _solution_summary(sol), "terms": rows, "files": ["pohozaev.csv"]}


# the amplitude-0 metric sees solver error through its square-root term
EVOLVE_TOL = 1e-13


def run_evolve(cfg: RunConfig) -> dict:
    sol = solve_steady(cfg.params, cfg.mode, n=cfg.nodes, tol=min(cfg.tol, EVOLVE_TOL), max_iter=cfg.max_iter)
    horizon = cfg.turnovers * turnover_time(cfg.eps)
    trace = run_stability_experiment(sol, cfg.amplitude, horizon=horizon, dt=cfg.dt or None,
                                     mode=cfg.perturbation_mode, output_every=cfg.output_every)
    rows = [(t, d, q.circulation, q.impulse, q.energy, q.area, q.volume)
            for t, d, q in zip(trace.times, trace.distances, trace.conserved)]
    io.write_csv(_out(cfg, "trace.csv"), io.TRACE_COLUMNS, rows)
    dist = np.asarray(trace.distances)
    report = {
        "amplitude": cfg.amplitude, "horizon": horizon, "initial_scale": trace.scale,
        "initial_metric": float(dist[0]), "max_metric": float(dist.max()),
        "max_ratio": float(dist.max() / dist[0]) if dist[0] > 0.0 else None,
        "max_over_scale": float(dist.max() / trace.scale),
        "drift": {name: trace.max_drift(name) for name in ("circulation", "impulse", "energy", "volume", "area")},
        "error": trace.error, "files": ["trace.csv"],
    }
    if trace.final is not None:
        io.write_boundary(_out(cfg, "boundary.csv"), trace.final.curve)
        report["files"].append("boundary.csv")
    return report


def run_maximize(cfg: RunConfig) -> dict:
    spec = AdmissibleClassSpec(cfg.eps, cfg.kappa, cfg.W)
    res = maximize(spec, mode=cfg.ascent_mode, max_iter=cfg.ascent_iter)
    io.write_csv(_out(cfg, "ascent.csv"), io.ASCENT_COLUMNS, res.rows)
    io.write_boundary(_out(cfg, "boundary.csv"), res.state.curve)
    value = res.augmented
    return {"converged": res.converged, "iterations": len(res.rows), "mu": res.mu,
            "multiplier": res.multiplier, "final_energy": res.rows[-1]["energy"], "final_augmented": float(value[-1]),
            "min_augmented_step": float(np.min(np.diff(value))) if value.size > 1 else 0.0,
            "files": ["ascent.csv", "boundary.csv"]}


def _random_patch(rng, eps: float, radius: float, center) -> PatchState:
    thetas = 2.0 * np.pi * np.arange(128) / 128
    bumps = np.zeros_like(thetas)
    for k in range(1, 6):
        amp = rng.uniform(0.0, 0.08) / k
        bumps += amp * np.cos(k * thetas + rng.uniform(0.0, 2.0 * np.pi))
    return PatchState(BoundaryCurve(center, thetas, radius * (1.0 + bumps)), eps)


def run_verify(cfg: RunConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    worst = 0.0
    for i in range(cfg.samples):
        x = (rng.uniform(0.05, 3.0), rng.uniform(-2.0, 2.0))
        y = (rng.uniform(0.05, 3.0), rng.uniform(-2.0, 2.0))
        rel = abs(gstar(x, y) / gstar_quadrature(x, y) - 1.0)
        worst = max(worst, rel)
        rows.append((0, i, rel))
    eps = cfg.eps
    radius = eps * np.sqrt(cfg.kappa / np.pi)
    ratios = []
    for i in range(cfg.pairs):
        a = _random_patch(rng, eps, radius, (1.0, 0.0))
        shift = radius * rng.uniform(0.0, 0.3, size=2)
        b = _random_patch(rng, eps, radius, (1.0 + shift[0], shift[1]))
        q = verify_energy_continuity_bound((a, b))
        ratios.append(q)
        rows.append((1, i, q))
    io.write_csv(_out(cfg, "verify.csv"), ("check", "index", "value"), rows)
    return {"seed": cfg.seed, "gstar_max_rel_error": worst, "gstar_samples": cfg.samples,
            "continuity_max_ratio": float(np.max(ratios)), "continuity_pairs": cfg.pairs,
            "checks": {"0": "gstar vs angular quadrature, relative error",
                       "1": "energy gap over continuity bound"},
            "files": ["verify.csv"]}


WORKFLOWS = {"solve": run_solve, "sweep": run_sweep, "kelvin-hicks": run_kelvin_hicks, "pohozaev": run_pohozaev,
             "evolve": run_evolve, "maximize": run_maximize, "verify": run_verify}


def run(cfg: RunConfig) -> dict:
    """Execute one workflow and write report.json next to its other files."""
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    report = WORKFLOWS[cfg.command](cfg)
    settings = asdict(cfg)
    settings.pop("output_dir")
    report = {"command": cfg.command, "config": settings, **report}
    io.write_json(out / "report.json", report)
    return report


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vring", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value settings file")
        for f in fields(RunConfig):
            if f.name == "command":
                continue
            flag = "--" + f.name.replace("_", "-")
            p.add_argument(flag, dest=f.name, default=argparse.SUPPRESS, metavar=f.name.upper())
    return parser


def _error_record(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg = None
    try:
        ns = vars(build_parser().parse_args(argv))
        logging.basicConfig(level=logging.DEBUG if ns.pop("verbose") else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        command = ns.pop("command")
        config_path = ns.pop("config", None)
        # for sweeps, --eps takes the comma-separated list
        if command in ("sweep", "kelvin-hicks") and "eps" in ns:
            ns["sweep_eps"] = ns.pop("eps")
        file_values = parse_config_file(config_path) if config_path else {}
        cfg = RunConfig.merged(command, file_values, ns)
        report = run(cfg)
    except RingError as exc:
        failure, code = exc, exc.exit_code
    except OSError as exc:
        failure, code = exc, 4
    except ValueError as exc:
        failure, code = exc, 3
    else:
        print(json.dumps({"command": report["command"], "files": report.get("files", []) + ["report.json"]}))
        return 0
    record = _error_record(failure, code)
    print(json.dumps(record), file=sys.stderr)
    if cfg is not None:
        try:
            io.write_json(Path(cfg.output_dir) / "error.json", record)
        except RingError:
            pass
    return code


if __name__ == "__main__":
    sys.exit(main())
