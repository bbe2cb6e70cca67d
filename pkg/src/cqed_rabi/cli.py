"""``cqed-rabi <experiment> [--config FILE] [--seed S] [--threads K] [--out DIR]``

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 every estimate of an ensemble discarded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from cqed_rabi import io
from cqed_rabi.config import (
    EXPERIMENTS,
    ConfigError,
    RunConfig,
    build_config,
    describe_keys,
    parse_override,
    parse_text,
)
from cqed_rabi.experiments import (
    EnsembleError,
    fisher_scaling,
    interior_minimum,
    scaling_study,
    strength_sweep,
)
from cqed_rabi.likelihood import LikelihoodError, mle_estimate
from cqed_rabi.physics import measurement_rates
from cqed_rabi.trajectory import TrajectoryConfig, TrajectoryError, simulate_trajectory
from cqed_rabi.units import OMEGA_R

log = logging.getLogger("cqed_rabi")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DISCARDED = 4


def _derived(cfg: RunConfig, gamma_m: float) -> dict:
    p = cfg.params(gamma_m)
    r = measurement_rates(p)
    return {
        "gamma_m": gamma_m,
        "eps_m_omega_r": p.eps_m / OMEGA_R,
        "gamma_ci_omega_r": r.gamma_ci / OMEGA_R,
        "gamma_ba_omega_r": r.gamma_ba / OMEGA_R,
        "gamma_d_omega_r": r.gamma_d / OMEGA_R,
        "b_stark_omega_r": r.b_stark / OMEGA_R,
        "params_fingerprint": p.fingerprint(),
    }


def run_likelihood(cfg: RunConfig, out: Path) -> dict:
    params = cfg.params()
    tcfg = TrajectoryConfig(dt=cfg.dt, tau=cfg.tau, total_time=cfg.T, seed=cfg.seed,
                            trajectory_index=cfg.trajectory_index)
    rec = simulate_trajectory(params, tcfg)
    res, curve = mle_estimate(rec, params, cfg.search())
    io.write_csv(out / "current_record.csv", ("bin_index", "current"), zip(range(rec.n_bins), rec.currents))
    w = curve.omegas / OMEGA_R
    io.write_csv(out / "likelihood_curve.csv", ("omega", "logl"), zip(w, curve.logls))
    io.write_dat(out / "likelihood_curve.dat", "omega[Omega_R] logL", [w, curve.logls])
    return {
        "omega_ml": None if res.omega_ml is None else res.omega_ml / OMEGA_R,
        "status": res.status,
        "peak_logl": res.peak_logl,
        "curvature": res.curvature,
        "n_bins": rec.n_bins,
        "derived": _derived(cfg, cfg.gamma_m),
    }


def run_sweep(cfg: RunConfig, out: Path) -> dict:
    pts = strength_sweep([g * OMEGA_R for g in cfg.gamma_m_list], cfg.T, cfg.M, cfg.seed,
                         cfg.template(), cfg.settings())
    rows = [(p.gamma_m / OMEGA_R, cfg.T, cfg.gamma_phi, cfg.M, p.n_discarded, p.delta_omega / OMEGA_R,
             np.nan, p.seed) for p in pts]
    io.write_csv(out / "sweep.csv", io.RESULT_COLUMNS, rows)
    io.write_dat(out / "sweep.dat", "gamma_m[Omega_R] delta_omega[Omega_R]",
                 [[r[0] for r in rows], [r[5] for r in rows]])
    k = interior_minimum(pts)
    if all(p.error for p in pts):
        raise EnsembleError("every point of the sweep failed")
    return {
        "interior_minimum_gamma_m": None if k is None else cfg.gamma_m_list[k],
        "point_errors": {str(cfg.gamma_m_list[i]): p.error for i, p in enumerate(pts) if p.error},
    }


def _scaling_rows(cfg, rep):
    rows = []
    for i, t in enumerate(rep.times):
        d = rep.values[i] / OMEGA_R if rep.kind == "delta_omega" else np.nan
        f = rep.values[i] * OMEGA_R**2 if rep.kind == "fisher" else np.nan
        rows.append((cfg.gamma_m, t, cfg.gamma_phi, cfg.M, rep.n_discarded[i], d, f, rep.seeds[i]))
    return rows


def run_scaling(cfg: RunConfig, out: Path) -> dict:
    rep = scaling_study(cfg.gamma_m * OMEGA_R, cfg.T_list, cfg.M, cfg.gamma_phi * OMEGA_R, cfg.seed,
                        cfg.template(), cfg.settings())
    io.write_csv(out / "scaling.csv", io.RESULT_COLUMNS, _scaling_rows(cfg, rep))
    io.write_dat(out / "scaling.dat", "T[tau_R] delta_omega sql hl [Omega_R]",
                 [rep.times, rep.values / OMEGA_R, rep.sql_curve() / OMEGA_R, rep.hl_curve() / OMEGA_R])
    return {"exponent_p": rep.exponent, "exponent_p_stderr": rep.exponent_stderr,
            "c_sql_omega_r": rep.c_sql / OMEGA_R, "c_hl_omega_r": rep.c_hl / OMEGA_R}


def run_fisher(cfg: RunConfig, out: Path) -> dict:
    rep = fisher_scaling(cfg.gamma_m * OMEGA_R, cfg.T_list, cfg.M, cfg.fd_step * OMEGA_R, cfg.seed,
                         cfg.gamma_phi * OMEGA_R, cfg.template(), cfg.settings())
    io.write_csv(out / "fisher.csv", io.RESULT_COLUMNS, _scaling_rows(cfg, rep))
    io.write_dat(out / "fisher.dat", "T[tau_R] F[Omega_R^-2] 1/sqrt(F)[Omega_R]",
                 [rep.times, rep.values * OMEGA_R**2, rep.precision / OMEGA_R])
    results = rep.extras["results"]
    return {"exponent_n": rep.exponent, "exponent_n_stderr": rep.exponent_stderr,
            "score_mean_over_sem": [r.score_mean / r.score_sem for r in results],
            "n_excluded": [r.n_excluded for r in results]}


RUNNERS = {"likelihood": run_likelihood, "sweep": run_sweep, "scaling": run_scaling, "fisher": run_fisher}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cqed-rabi",
        description="Simulate continuous dispersive readout of a Rabi-driven qubit and estimate "
                    "the Rabi frequency by maximum likelihood. Rates in units of the true Rabi "
                    "frequency Omega_R, times in Rabi periods tau_R.",
        epilog=describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="key = value config file")
    ap.add_argument("--seed", type=int, help="base seed, overrides the config")
    ap.add_argument("--threads", type=int, help="worker threads, overrides the config")
    ap.add_argument("--out", help="output directory, overrides the config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any config key (repeatable)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _load(args) -> RunConfig:
    overrides = dict(parse_override(s) for s in args.set)
    for key, val in (("seed", args.seed), ("workers", args.threads), ("out", args.out)):
        if val is not None:
            overrides[key] = val
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        values = parse_text(text, args.config)
    else:
        values = {}
    if values.get("experiment", args.experiment) != args.experiment:
        raise ConfigError(f"config names experiment {values['experiment']!r} but {args.experiment!r} was requested")
    values["experiment"] = args.experiment
    values.update(overrides)
    return build_config(values)


def _fail(code: int, kind: str, exc: Exception, out: Path | None) -> int:
    record = {"status": "error", "exit_code": code, "kind": kind, "message": str(exc)}
    for attr in ("step", "bin_index"):
        if hasattr(exc, attr):
            record[attr] = getattr(exc, attr)
    print(json.dumps(record), file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    out = None
    try:
        cfg = _load(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc, None)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        results = RUNNERS[cfg.experiment](cfg, out)
    except EnsembleError as exc:
        return _fail(EXIT_DISCARDED, "all_discarded", exc, out)
    except (TrajectoryError, LikelihoodError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERICAL, "numerical", exc, out)
    io.write_manifest(out / "manifest.json", {
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "units": {"rates": "Omega_R", "times": "tau_R", "phi_lo": "rad"},
        "initial_state": "|1><1|",
        "results": results,
        "wall_time_s": time.perf_counter() - t0,
        "argv": sys.argv if argv is None else argv,
    })
    log.info("wrote %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
