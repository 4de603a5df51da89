"""Command-line front end: ``repulsive-abc <command> --config FILE --seed N --out DIR``.

Every command validates its whole configuration before computing anything,
writes into a scratch directory next to ``--out`` and moves the files into
place only on success. Exit status: 0 success, 2 configuration or input
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .assess import mc_test, rps_compare
from .config import ConfigError, RunConfig
from .inference import pilot_run, posterior_predictive, run_chains
from .inference.mcmc import PosteriorSamples
from .io import (
    PatternFormatError,
    dump_json,
    read_pattern,
    read_posterior_csv,
    summary_document,
    validate_summary,
    write_pattern,
    write_posterior_csv,
)
from .models import ModelKind
from .parallel import pmap, task_rngs
from .pattern import SummaryConfig, l_curve
from .pseudolik import DEFAULT_R_GRID, profile_radius
from .simulate import simulate

__all__ = ["main", "build_parser"]

COMMANDS = ("simulate", "profile", "pilot", "fit", "check", "rps")

# a prepared command: fn(out_dir, rng, threads, seed) -> None
Job = Callable[[Path, np.random.Generator, int, int], None]


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            # shortest repr that round-trips exactly
            wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _curve_cfg(rc: RunConfig, section: str, w) -> SummaryConfig:
    r_max = rc.float(section, "curve_r_max", 0.25 * w.min_side())
    m = rc.int(section, "curve_m", 25, minimum=1)
    return SummaryConfig.equally_spaced(r_max, m)


def _prep_simulate(rc: RunConfig) -> Job:
    spec = rc.model_spec()
    w = rc.window()
    count = rc.int("simulate", "count", 1, minimum=1)
    curves = rc.bool("simulate", "curves", False)
    ctrl = rc.strauss_controls()
    ccfg = _curve_cfg(rc, "simulate", w) if curves else None
    if ccfg:
        ccfg.check_window(w)

    def job(out, rng, threads, seed):
        pats = pmap(lambda r: simulate(spec, w, r, ctrl), task_rngs(rng, count), threads)
        for k, p in enumerate(pats):
            write_pattern(p, out / f"pattern_{k:03d}.csv")
            if ccfg and p.n() >= 2:
                _write_rows(out / f"lcurve_{k:03d}.csv", ["r", "value"], l_curve(p, ccfg))

    return job


def _profile_args(rc: RunConfig):
    grid = rc.floats("profile", "r_grid", tuple(DEFAULT_R_GRID))
    h_grid = rc.floats("profile", "h_grid", (0.0,))
    quad = rc.int("profile", "quad", 128, minimum=8)
    return grid, h_grid, quad


def _prep_profile(rc: RunConfig) -> Job:
    y = read_pattern(rc.path("data", "pattern"))
    grid, h_grid, quad = _profile_args(rc)

    def job(out, rng, threads, seed):
        res = profile_radius(y, grid, h_grid, quad)
        _write_rows(out / "profile.csv", ["R", "h", "log_pl", "beta", "gamma"], res.rows())
        dump_json(
            {
                "R_hat": res.R_hat, "h_hat": res.h_hat, "beta_hat": res.beta_hat, "gamma_hat": res.gamma_hat,
                "seed": seed, "config": rc.resolved,
            },
            out / "profile.json",
        )

    return job


def _pilot_args(rc: RunConfig):
    return dict(
        L=rc.int("pilot", "L", 10_000, minimum=1),
        p_star=rc.float("pilot", "p_star", 1.0),
        use_lasso=rc.bool("pilot", "lasso", True),
        k_folds=rc.int("pilot", "k_folds", 5, minimum=2),
        enforce_size=rc.bool("pilot", "enforce_size", True),
    )


def _check_pilot_size(args, m: int) -> None:
    if args["enforce_size"] and args["L"] < 50 * (1 + m):
        raise ConfigError(f"[pilot] L={args['L']} is below 50*(1+M)={50 * (1 + m)}")


def _pilot_doc(pil, seed, rc) -> dict:
    names = list(pil.feature_names)
    return {
        "model": pil.kind.name,
        "fixed": dict(pil.kind.fixed),
        "parameters": list(pil.kind.param_names),
        "features": names,
        "active_features": [names[i] for i in pil.active],
        "intercept": pil.intercept.tolist(),
        "coef": pil.coef.tolist(),
        "var_hat": pil.var_hat.tolist(),
        "percentiles": {format(k, "g"): v for k, v in pil.percentiles.items()},
        "p_star": pil.p_star,
        "epsilon": pil.epsilon,
        "L": int(len(pil.psi) + pil.dropped_empty),
        "dropped_empty": int(pil.dropped_empty),
        "seed": seed,
        "config": rc.resolved,
    }


def _write_pilot(pil, out: Path, seed, rc) -> None:
    dump_json(_pilot_doc(pil, seed, rc), out / "pilot.json")
    header = [f"log_{p}" for p in pil.kind.param_names] + list(pil.feature_names) + ["psi"]
    rows = (list(t) + list(e) + [s] for t, e, s in zip(pil.theta, pil.eta, pil.psi))
    _write_rows(out / "pilot_draws.csv", header, rows)


def _prep_pilot(rc: RunConfig) -> Job:
    y = read_pattern(rc.path("data", "pattern"))
    kind, _ = rc.model_kind()
    prior = rc.prior(kind)
    cfg = rc.summary(kind.fixed.get("R"))
    cfg.check_window(y.window)
    args = _pilot_args(rc)
    _check_pilot_size(args, cfg.m)
    ctrl = rc.strauss_controls()

    def job(out, rng, threads, seed):
        pil = pilot_run(prior, kind, y, cfg, rng=rng, n_jobs=threads, strauss_controls=ctrl, **args)
        _write_pilot(pil, out, seed, rc)

    return job


def _prep_fit(rc: RunConfig) -> Job:
    y = read_pattern(rc.path("data", "pattern"))
    kind, profile = rc.model_kind(allow_profile=True)
    prof_args = _profile_args(rc) if profile else None
    prior = rc.prior(kind)  # validates expressions; rebuilt after profiling
    cfg0 = rc.summary(kind.fixed.get("R"))  # R is a placeholder when profiled
    if not profile:
        cfg0.check_window(y.window)
    pil_args = _pilot_args(rc)
    _check_pilot_size(pil_args, cfg0.m)
    n_keep = rc.int("fit", "n_keep", 1000, minimum=1)
    chains = rc.int("fit", "chains", 1, minimum=1)
    sim_cap = rc.int("fit", "sim_cap", 100, minimum=1)
    eps = rc.epsilon("fit", "epsilon")
    scale = rc.floats("fit", "proposal_scale", None)
    curves = rc.bool("fit", "curves", False)
    ccfg = _curve_cfg(rc, "fit", y.window) if curves else None
    curve_T = rc.int("fit", "curve_T", 100, minimum=1) if curves else 0
    ctrl = rc.strauss_controls()

    def job(out, rng, threads, seed):
        k, pr = kind, prior
        if profile:
            res = profile_radius(y, *prof_args)
            fixed = dict(kind.fixed, R=res.R_hat)
            if res.h_hat > 0:
                fixed["h"] = res.h_hat
            k = ModelKind("strauss", fixed)
            pr = type(prior)(k, prior.params)
            _write_rows(out / "profile.csv", ["R", "h", "log_pl", "beta", "gamma"], res.rows())
        cfg = rc.summary(k.fixed.get("R"))
        cfg.check_window(y.window)
        pilot_rng, chain_rng, pred_rng = rng.spawn(3)
        pil = pilot_run(pr, k, y, cfg, rng=pilot_rng, n_jobs=threads, strauss_controls=ctrl, **pil_args)
        _write_pilot(pil, out, seed, rc)
        samples = run_chains(
            pil, pr, y, n_keep, chain_rng.spawn(chains), n_jobs=threads, epsilon=eps,
            proposal_scale=scale, sim_cap=sim_cap, strauss_controls=ctrl, seed=seed,
        )
        for c, s in enumerate(samples):
            name = "posterior.csv" if chains == 1 else f"posterior_chain{c}.csv"
            write_posterior_csv(s, out / name)
        doc = summary_document(samples, seed, rc.resolved)
        validate_summary(doc)
        dump_json(doc, out / "summary.json")
        if ccfg:
            _write_rows(out / "lcurve_observed.csv", ["r", "value"], l_curve(y, ccfg))
            pooled = PosteriorSamples(k, np.vstack([s.theta for s in samples]), np.zeros(0), np.zeros(0),
                                      math.nan, 0, math.nan)
            pats = [p for p in posterior_predictive(pooled, y.window, curve_T, pred_rng, ctrl, threads)
                    if p.n() >= 2]
            if pats:
                vals = np.array([[v for _, v in l_curve(p, ccfg)] for p in pats])
                _write_rows(out / "lcurve_predictive.csv", ["r", "value"], zip(ccfg.r_grid, vals.mean(0)))

    return job


def _prep_check(rc: RunConfig) -> Job:
    y = read_pattern(rc.path("data", "pattern"))
    kind, _ = rc.model_kind()
    prior = rc.prior(kind)
    U = rc.int("check", "U", 999, minimum=19)
    radii = rc.floats("check", "radii")
    if not radii or min(radii) <= 0 or max(radii) >= y.window.min_side() / 2:
        raise ConfigError("[check] radii must be positive and below half the shorter window side")
    ctrl = rc.strauss_controls()

    def job(out, rng, threads, seed):
        res = mc_test(y, prior, kind, radii, U, rng, threads, ctrl)
        q = res.quantiles()
        rows = [(r, int(o), p, *qq) for r, o, p, qq in zip(res.radii, res.observed, res.p_values, q)]
        _write_rows(out / "mc_test.csv", ["r", "observed", "p_value", "q025", "q500", "q975"], rows)
        dump_json({"model": kind.name, "U": U, "radii": list(res.radii), "p_values": res.p_values.tolist(),
                   "seed": seed, "config": rc.resolved}, out / "mc_test.json")

    return job


def _load_fit(d: Path) -> PosteriorSamples:
    doc = json.loads((d / "summary.json").read_text())
    kind = ModelKind(doc["model"], doc["fixed"])
    files = sorted(d.glob("posterior*.csv"))
    if not files:
        raise ConfigError(f"no posterior CSV in {d}")
    parts = [read_posterior_csv(f, kind) for f in files]
    theta = np.vstack([p.theta for p in parts])
    return PosteriorSamples(kind, theta, np.concatenate([p.sim_count for p in parts]),
                            np.full(len(theta), math.nan), math.nan, 0, math.nan)


def _prep_rps(rc: RunConfig) -> Job:
    y = read_pattern(rc.path("data", "pattern"))
    J = rc.int("rps", "J", 1000, minimum=1)
    q_max = rc.float("rps", "q_max", 0.1)
    T = rc.int("rps", "T", 100, minimum=1)
    fits = []
    for item in rc.str("rps", "fits").split(","):
        name, sep, d = item.strip().partition(":")
        if not sep:
            raise ConfigError("[rps] fits must be 'name:directory' items separated by commas")
        path = Path(d.strip())
        path = path if path.is_absolute() else rc.base / path
        if not (path / "summary.json").is_file():
            raise ConfigError(f"[rps] {name}: no summary.json in {path}")
        fits.append((name.strip(), _load_fit(path)))
    if math.sqrt(q_max * y.window.area()) > y.window.min_side():
        raise ConfigError("[rps] q_max too large for the window")
    ctrl = rc.strauss_controls()

    def job(out, rng, threads, seed):
        res = rps_compare(y, fits, J, q_max, T, rng, threads, ctrl)
        _write_rows(out / "rps.csv", ["model", "mean_rps", "J", "q_max", "T"],
                    [(r.name, r.mean, J, q_max, T) for r in res])
        regions = res[0].regions
        _write_rows(out / "rps_regions.csv", ["x0", "x1", "y0", "y1", *(r.name for r in res)],
                    [(*regions[j], *(r.rps[j] for r in res)) for j in range(J)])

    return job


PREPARE = {
    "simulate": _prep_simulate,
    "profile": _prep_profile,
    "pilot": _prep_pilot,
    "fit": _prep_fit,
    "check": _prep_check,
    "rps": _prep_rps,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="repulsive-abc", description="Repulsive point-process ABC toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides [run] seed)")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (overrides [run] threads)")
        sp.add_argument("--out", required=True, help="output directory")
    return ap


def _fail(code: int, exc: BaseException) -> int:
    msg = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(msg), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = RunConfig.load(args.config)
        seed = args.seed if args.seed is not None else rc.int("run", "seed", None)
        if seed is None:
            raise ConfigError("a seed is required (--seed or [run] seed)")
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        rc.resolved.setdefault("run", {})["seed"] = seed
        threads = args.threads if args.threads is not None else rc.int("run", "threads", 1, minimum=1)
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        rc.resolved["run"].pop("threads", None)  # parallelism never changes results
        job = PREPARE[args.command](rc)
    except (ConfigError, PatternFormatError, ValueError, OSError) as e:
        return _fail(2, e)

    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        scratch = Path(tempfile.mkdtemp(prefix=f".{out.name}.partial-", dir=out.parent))
    except OSError as e:
        return _fail(2, e)
    try:
        job(scratch, np.random.default_rng(seed), threads, seed)
        files = sorted(p.name for p in scratch.iterdir())
        dump_json({"command": args.command, "version": __version__, "seed": seed,
                   "config": rc.resolved, "files": files}, scratch / "manifest.json")
        out.mkdir(exist_ok=True)
        for p in scratch.iterdir():
            dest = out / p.name
            if dest.exists():
                dest.unlink()
            shutil.move(str(p), dest)
    except Exception as e:  # any module failure is reported, never a traceback
        return _fail(3, e)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    print(json.dumps({"status": "ok", "command": args.command, "out": str(out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
