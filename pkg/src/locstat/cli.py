"""Command-line harness.

Subcommands: ``simulate`` exports one path as CSV; ``estimate-lse``,
``estimate-qmle`` and ``estimate-whittle`` run one replication and emit
per-point estimates; ``montecarlo`` runs a full study from a JSON
config with flag overrides.  Exit codes: 0 on success, 2 on
configuration errors, 3 on numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericError
from .harness import StudyConfig, _fmt, run_study
from .kalman import qmle_estimate
from .levy import GaussianLevy, NIGLevy, RngStream, levy_moments
from .optimize import DeConfig
from .ou_lse import lse_estimate, lse_standardized_error
from .simulate import (curve_by_name, extract_window, simulate_tv_ou,
                       simulate_tv_statespace, theta_star_curve)
from .statespace import example2d_family
from .whittle import whittle_estimate

_NIG_DEFAULTS = {"alpha": 3.0, "beta": 1.0, "delta_nig": 2.0}


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument("--noise", choices=["gauss", "nig"], default="nig")
    p.add_argument("--sigma2", type=float, default=0.2,
                   help="variance of the Gaussian driver")
    p.add_argument("--nig-alpha", type=float, default=_NIG_DEFAULTS["alpha"])
    p.add_argument("--nig-beta", type=float, default=_NIG_DEFAULTS["beta"])
    p.add_argument("--nig-delta", type=float,
                   default=_NIG_DEFAULTS["delta_nig"])
    p.add_argument("--nig-mu", type=float, default=None,
                   help="location; default centers the increments")


def _noise_from_args(args) -> GaussianLevy | NIGLevy:
    if args.noise == "gauss":
        return GaussianLevy(sigma2=args.sigma2)
    mu = args.nig_mu
    if mu is None:
        kappa = np.sqrt(args.nig_alpha ** 2 - args.nig_beta ** 2)
        mu = -args.nig_delta * args.nig_beta / kappa
    return NIGLevy(alpha=args.nig_alpha, beta=args.nig_beta,
                   delta_nig=args.nig_delta, mu=mu)


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--T", type=float, default=2000.0)
    p.add_argument("--sim-ratio", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel", choices=["rect", "epan"], default="rect")
    p.add_argument("--bandwidth-scale", type=float, default=400.0)
    p.add_argument("--Delta", type=float, default=1.0)
    p.add_argument("--out", type=Path, required=True)


def _add_de_flags(p: argparse.ArgumentParser):
    p.add_argument("--de-pop", type=int, default=None)
    p.add_argument("--de-gens", type=int, default=300)
    p.add_argument("--de-seed", type=int, default=0)
    p.add_argument("--de-tol", type=float, default=1e-8)


def _study_points(args) -> np.ndarray:
    if args.points == 1:
        return np.array([0.5 * args.T])
    return np.round(np.linspace(0.2 * args.T, 0.8 * args.T, args.points)
                    / args.Delta) * args.Delta


def _cmd_simulate(args) -> int:
    noise = _noise_from_args(args)
    rng = RngStream(args.seed)
    if args.model == "ou":
        path = simulate_tv_ou(curve_by_name(args.curve), noise, args.N,
                              args.T, args.sim_ratio, rng)
    else:
        family = example2d_family()
        truth = theta_star_curve(levy_moments(noise)[1])
        path = simulate_tv_statespace(family, truth, noise, args.N,
                                      args.T, args.sim_ratio, rng)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        p = 0 if path.states is None else path.states.shape[1]
        w.writerow(["t", "value"] + [f"x{k+1}" for k in range(p)])
        ts = path.time()
        for i in range(len(path.values)):
            row = [_fmt(ts[i]), _fmt(path.values[i])]
            if p:
                row += [_fmt(v) for v in path.states[i]]
            w.writerow(row)
    print(f"wrote {len(path.values)} rows to {args.out}")
    return 0


def _cmd_estimate_lse(args) -> int:
    noise = _noise_from_args(args)
    curve = curve_by_name(args.curve)
    cfg = StudyConfig(estimator="lse", noise=noise, N_list=(args.N,),
                      replications=1, kernel=args.kernel, T=args.T,
                      n_points=args.points, curve=args.curve,
                      theta_box=tuple(args.box), Delta=args.Delta,
                      sim_ratio=args.sim_ratio, seed=args.seed,
                      bandwidth_scale=args.bandwidth_scale)
    us = cfg.u_points()
    rng = RngStream(args.seed, 0)
    path = simulate_tv_ou(curve, noise, args.N, args.T, args.sim_ratio, rng)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "a_true", "a_hat", "sigma_hat", "std_err"])
        for u in us:
            grid = cfg.grid_for(args.N, u)
            window = extract_window(path, grid)
            e = lse_estimate(window, grid, args.kernel, tuple(args.box))
            se = (lse_standardized_error(e, float(curve(u)), grid)
                  if args.kernel == "rect" else float("nan"))
            w.writerow([_fmt(u), _fmt(curve(u)), _fmt(e.a_hat),
                        _fmt(e.sigma_u_hat), _fmt(se)])
    print(f"wrote {len(us)} estimates to {args.out}")
    return 0


def _cmd_estimate_ss(args, which: str) -> int:
    noise = _noise_from_args(args)
    family = example2d_family()
    truth = theta_star_curve(levy_moments(noise)[1])
    cfg = StudyConfig(estimator=which, noise=noise, N_list=(args.N,),
                      replications=1, kernel=args.kernel, T=args.T,
                      n_points=args.points, Delta=args.Delta,
                      sim_ratio=args.sim_ratio, seed=args.seed,
                      bandwidth_scale=args.bandwidth_scale)
    us = cfg.u_points()
    rng = RngStream(args.seed, 0)
    path = simulate_tv_statespace(family, truth, noise, args.N, args.T,
                                  args.sim_ratio, rng)
    estimate = qmle_estimate if which == "qmle" else whittle_estimate
    header = ["u", "theta1_true", "theta2_true", "theta3_true",
              "theta1_hat", "theta2_hat", "theta3_hat", "objective",
              "riccati_residual"]
    if which == "whittle":
        header.append("whittle_value")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for iu, u in enumerate(us):
            grid = cfg.grid_for(args.N, u)
            window = extract_window(path, grid)
            de = DeConfig(population=args.de_pop, max_gens=args.de_gens,
                          tol=args.de_tol, seed=args.de_seed + iu)
            e = estimate(window, grid, args.kernel, family, de)
            row = ([_fmt(u)] + [_fmt(v) for v in truth(u)]
                   + [_fmt(v) for v in e.theta]
                   + [_fmt(e.objective), _fmt(e.riccati_residual)])
            if which == "whittle":
                row.append(_fmt(e.whittle_value))
            w.writerow(row)
    print(f"wrote {len(us)} estimates to {args.out}")
    return 0


_FULL_SCALE = {"replications": 400, "N_list": [1, 4, 16, 64, 256],
               "n_points": 101}


def _cmd_montecarlo(args) -> int:
    cfg_dict = {}
    if args.config is not None:
        with open(args.config) as fh:
            cfg_dict = json.load(fh)
    noise_dict = cfg_dict.pop("noise", None)
    if args.noise_flag_used:
        noise = _noise_from_args(args)
    elif noise_dict is not None:
        if noise_dict.get("kind") == "gauss":
            noise = GaussianLevy(sigma2=noise_dict["sigma2"])
        else:
            noise = NIGLevy(alpha=noise_dict["alpha"],
                            beta=noise_dict["beta"],
                            delta_nig=noise_dict["delta_nig"],
                            mu=noise_dict["mu"])
    else:
        noise = _noise_from_args(args)
    overrides = {
        "estimator": args.estimator, "replications": args.replications,
        "N_list": args.N_list, "n_points": args.points, "seed": args.seed,
        "kernel": args.kernel, "T": args.T, "sim_ratio": args.sim_ratio,
        "curve": args.curve, "de_max_gens": args.de_gens,
        "de_population": args.de_pop, "de_tol": args.de_tol,
        "bandwidth_scale": args.bandwidth_scale,
    }
    for key, val in overrides.items():
        if val is not None:
            cfg_dict[key] = val
    if args.full_scale:
        cfg_dict.update(_FULL_SCALE)
    cfg_dict.setdefault("estimator", "lse")
    known = {f.name for f in StudyConfig.__dataclass_fields__.values()}
    unknown = set(cfg_dict) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    config = StudyConfig(noise=noise, **cfg_dict)
    result = run_study(config)
    result.save(args.outdir)
    print(f"study written to {args.outdir}")
    for iN, N in enumerate(config.N_list):
        vals = ", ".join(_fmt(v) for v in result.mise[iN])
        print(f"N = {N}: MISE = [{vals}]")
    if result.failures:
        print(f"{len(result.failures)} estimation cells failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="locstat",
        description="simulate and estimate time-varying OU and "
                    "state-space models")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path and export CSV")
    p.add_argument("--model", choices=["ou", "statespace"], default="ou")
    p.add_argument("--curve", choices=["a1", "a2", "a3"], default="a2")
    _add_noise_flags(p)
    _add_common_flags(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("estimate-lse",
                       help="least-squares estimates along one path")
    p.add_argument("--curve", choices=["a1", "a2", "a3"], default="a2")
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--box", type=float, nargs=2, default=[0.01, 5.0])
    _add_noise_flags(p)
    _add_common_flags(p)
    p.set_defaults(fn=_cmd_estimate_lse)

    for name in ("estimate-qmle", "estimate-whittle"):
        p = sub.add_parser(name, help=f"{name.split('-')[1]} estimates "
                                      "along one path")
        p.add_argument("--family", choices=["example2d"],
                       default="example2d")
        p.add_argument("--points", type=int, default=5)
        _add_noise_flags(p)
        _add_common_flags(p)
        _add_de_flags(p)
        which = name.split("-")[1]
        p.set_defaults(fn=lambda a, w=which: _cmd_estimate_ss(a, w))

    p = sub.add_parser("montecarlo", help="run a full Monte Carlo study")
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file with StudyConfig fields")
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--estimator", choices=["lse", "qmle", "whittle"],
                   default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--N-list", type=int, nargs="+", default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--curve", choices=["a1", "a2", "a3"], default=None)
    p.add_argument("--kernel", choices=["rect", "epan"], default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--sim-ratio", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bandwidth-scale", type=float, default=None)
    p.add_argument("--full-scale", action="store_true",
                   help="run the full-size study configuration")
    _add_noise_flags(p)
    p.add_argument("--de-pop", type=int, default=None)
    p.add_argument("--de-gens", type=int, default=None)
    p.add_argument("--de-tol", type=float, default=None)
    p.set_defaults(fn=_cmd_montecarlo)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    raw = argv if argv is not None else sys.argv[1:]
    args.noise_flag_used = any(
        str(tok).startswith(("--noise", "--sigma2", "--nig-")) for tok in raw)
    try:
        return args.fn(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
