"""Command-line front end.

Every subcommand reads a YAML or JSON config whose "kind" names the
operation, runs it, writes CSV/JSON outputs plus a manifest into --out,
and exits 0 on success, 1 when a recorded check fails, 2 on config
errors, 3 on numerical failures.
"""

import argparse
import json
import os
import sys

import numpy as np
import yaml

from . import __version__
from .constraints import FullSpace, constraint_from_config
from .discrete import (
    OnePeriodMarket, ScenarioTree, discontinuity_report, one_period_optimal,
    tree_projection_convergence,
)
from .errors import (
    ConfigError, DensityFloorHit, DimensionMismatch, GrowthlabError,
    InfeasibleConstraint, InvalidSpec, NonConvergence, NonNestedPartitions,
    QuadratureUnderResolved, ThresholdFailure, UnsupportedSignalModel,
)
from .market import (
    GaussianSignalModel, MarketSpec, TiltSpec, density_paths, simulate_paths,
)
from .numeraire import growth_path, growth_rate, numeraire_fractions, wealth_paths
from .quadform import cov_norm, optimal_fraction
from .reporting import (
    RunManifest, write_csv, write_json, write_ladder_csv, write_wealth_csv,
)
from .sensitivity import first_order_check, response_quotient, second_order_check
from .stability import (
    LadderReport, constraint_ladder, density_sequence_check,
    excursion_density_ladder, filtration_ladder, lognormal_density_ladder,
    probability_ladder,
)

CONFIG_KINDS = {
    "solve": ("solve",),
    "simulate": ("simulate",),
    "stability": ("stability-filtration", "stability-probability",
                  "stability-constraint"),
    "sensitivity": ("sensitivity",),
    "counterexample": ("counterexample",),
    "tree": ("tree-projection",),
    "density-check": ("density-check",),
}

SHARED_KEYS = ("kind", "seed", "paths", "threads")


def _load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    try:
        if path.endswith(".json"):
            cfg = json.loads(text)
        else:
            cfg = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config root must be a mapping, got {type(cfg).__name__}")
    return cfg


def _require_keys(cfg, required, optional, where):
    unknown = sorted(set(cfg) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"missing keys in {where}: {', '.join(missing)}")


def _positive_int(cfg_value, name):
    try:
        value = int(cfg_value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {cfg_value!r}")
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def _seed_value(raw):
    try:
        seed = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {raw!r}")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed must fit in 64 bits, got {seed}")
    return seed


def _market_spec(cfg):
    _require_keys(cfg, ("dim", "n_steps"),
                  ("horizon", "covariance", "drift", "clock", "normalize_clock"),
                  "market")
    clock = cfg.get("clock", "uniform")
    if isinstance(clock, list):
        clock = np.asarray(clock, dtype=float)
    cov = cfg.get("covariance")
    drift = cfg.get("drift")
    try:
        return MarketSpec(
            dim=_positive_int(cfg["dim"], "market.dim"),
            n_steps=_positive_int(cfg["n_steps"], "market.n_steps"),
            horizon=float(cfg.get("horizon", 1.0)),
            covariance=None if cov is None else np.asarray(cov, dtype=float),
            drift=None if drift is None else np.asarray(drift, dtype=float),
            clock=clock,
            normalize_clock=bool(cfg.get("normalize_clock", True)),
        )
    except (InvalidSpec, DimensionMismatch, ValueError) as exc:
        raise ConfigError(f"bad market config: {exc}") from exc


def _constraint(cfg, default_fullspace=True):
    if cfg is None:
        if default_fullspace:
            return FullSpace()
        raise ConfigError("constraint config is required")
    try:
        return constraint_from_config(cfg)
    except (InfeasibleConstraint, InvalidSpec, ValueError, TypeError) as exc:
        raise ConfigError(f"bad constraint config: {exc}") from exc


def _signal_model(cfg):
    _require_keys(cfg, ("direction",),
                  ("prior_mean", "prior_std", "noise_scales"), "signal")
    try:
        return GaussianSignalModel(
            direction=np.asarray(cfg["direction"], dtype=float),
            prior_mean=float(cfg.get("prior_mean", 0.0)),
            prior_std=float(cfg.get("prior_std", 1.0)),
            noise_scales=None if cfg.get("noise_scales") is None
            else np.asarray(cfg["noise_scales"], dtype=float),
        )
    except (InvalidSpec, UnsupportedSignalModel, ValueError) as exc:
        raise ConfigError(f"bad signal config: {exc}") from exc


def _tilt_spec(cfg):
    _require_keys(cfg, ("lam1",), ("orthogonal_vol", "energy_cap", "floor"),
                  "tilt")
    try:
        return TiltSpec(
            lam1=np.asarray(cfg["lam1"], dtype=float),
            orthogonal_vol=float(cfg.get("orthogonal_vol", 0.0)),
            energy_cap=float(cfg.get("energy_cap", 50.0)),
            floor=float(cfg.get("floor", 1e-12)),
        )
    except (InvalidSpec, ValueError) as exc:
        raise ConfigError(f"bad tilt config: {exc}") from exc


def _runtime(cfg, args):
    """Shared knobs with command-line overrides."""
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    paths = args.paths if args.paths is not None else cfg.get("paths", 1024)
    threads = args.threads if args.threads is not None else cfg.get("threads", 1)
    return (_seed_value(seed), _positive_int(paths, "paths"),
            _positive_int(threads, "threads"))


def _slope_summary(slopes):
    return {
        name: {
            "slope": res["slope"],
            "ci_low": res["ci"][0],
            "ci_high": res["ci"][1],
            "zero_column": res["zero"],
            "passed": res["passed"],
        }
        for name, res in slopes.items()
    }


def _finish(manifest, out_dir):
    path = manifest.write(out_dir)
    manifest.record_file(path)
    if not manifest.all_passed:
        failing = sorted(k for k, v in manifest.checks.items() if not v)
        raise ThresholdFailure(f"failed checks: {', '.join(failing)}")
    return 0


def _write_table(out_dir, manifest, name, header, rows):
    path = os.path.join(out_dir, name)
    write_csv(path, header, rows)
    manifest.record_file(path)
    return path


def _write_summary(out_dir, manifest, payload):
    path = os.path.join(out_dir, "summary.json")
    write_json(path, payload)
    manifest.record_file(path)
    return path


def cmd_solve(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "covariance", "drift"),
                  ("constraint",) + SHARED_KEYS[1:], "config")
    cov = np.asarray(cfg["covariance"], dtype=float)
    drift = np.asarray(cfg["drift"], dtype=float)
    constraint = _constraint(cfg.get("constraint"))
    fraction = optimal_fraction(cov, drift, constraint)
    growth = float(growth_rate(cov, drift, fraction))
    _write_summary(out_dir, manifest, {
        "fraction": fraction,
        "growth": growth,
        "drift_norm": cov_norm(cov, drift),
        "fraction_norm": cov_norm(cov, fraction),
        "constraint": constraint.to_config(),
    })
    manifest.record_check("solved", True)
    return manifest


def cmd_simulate(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "market"), ("constraint",) + SHARED_KEYS[1:],
                  "config")
    seed, paths, threads = _runtime(cfg, args)
    spec = _market_spec(cfg["market"])
    constraint = _constraint(cfg.get("constraint"))
    bundle = simulate_paths(spec, paths, seed, threads=threads)
    fractions = numeraire_fractions(bundle, constraint)
    wealth = wealth_paths(bundle, fractions)
    gp = growth_path(bundle.cov, bundle.drift, constraint, bundle.dG)
    zero = np.zeros((paths, 1))
    log_x = np.concatenate((zero, wealth.log_wealth), axis=1)
    b_part = np.concatenate((zero, np.cumsum(wealth.dB, axis=1)), axis=1)
    l_part = np.concatenate((zero, np.cumsum(wealth.dL, axis=1)), axis=1)
    path = os.path.join(out_dir, "wealth.csv")
    write_wealth_csv(path, spec.grid, log_x[0], b_part[0], l_part[0],
                     gp.cumulative)
    manifest.record_file(path)
    terminal = wealth.terminal_log_wealth
    _write_summary(out_dir, manifest, {
        "mean_terminal_log_wealth": float(terminal.mean()),
        "stderr_terminal_log_wealth": float(terminal.std() / np.sqrt(paths)),
        "expected_growth": gp.total,
        "unconstrained_growth_bound": gp.unconstrained_bound,
        "n_paths": paths,
        "seed": seed,
    })
    manifest.record_check("completed", True)
    return manifest


def cmd_stability(cfg, args, out_dir, manifest):
    kind = cfg["kind"]
    seed, paths, threads = _runtime(cfg, args)
    if kind == "stability-filtration":
        _require_keys(cfg, ("kind", "market", "signal"),
                      ("constraint", "event_threshold") + SHARED_KEYS[1:],
                      "config")
        spec = _market_spec(cfg["market"])
        model = _signal_model(cfg["signal"])
        constraint = _constraint(cfg.get("constraint"))
        threshold = cfg.get("event_threshold")
        report = filtration_ladder(
            spec, model, constraint, paths, seed, threads=threads,
            event_threshold=None if threshold is None else float(threshold))
    elif kind == "stability-probability":
        _require_keys(cfg, ("kind", "market", "tilt"),
                      ("constraint", "eps_ladder") + SHARED_KEYS[1:], "config")
        spec = _market_spec(cfg["market"])
        tilt = _tilt_spec(cfg["tilt"])
        constraint = _constraint(cfg.get("constraint"))
        eps = cfg.get("eps_ladder")
        report = probability_ladder(
            spec, tilt, constraint, paths, seed, threads=threads,
            eps_ladder=None if eps is None else np.asarray(eps, dtype=float))
    else:
        _require_keys(cfg, ("kind", "market", "sets", "limit_set"),
                      ("bound_slack",) + SHARED_KEYS[1:], "config")
        spec = _market_spec(cfg["market"])
        sets = [_constraint(c, default_fullspace=False) for c in cfg["sets"]]
        limit = _constraint(cfg["limit_set"], default_fullspace=False)
        report = constraint_ladder(
            spec, sets, limit, paths, seed, threads=threads,
            bound_slack=float(cfg.get("bound_slack", 1e-6)))
        manifest.record_check("per_step_bound", report.meta["bound_ok"])
    path = os.path.join(out_dir, "ladder.csv")
    write_ladder_csv(path, report)
    manifest.record_file(path)
    slopes = report.slopes()
    for name, res in slopes.items():
        manifest.record_check(f"decay:{name}", res["passed"])
    _write_summary(out_dir, manifest, {
        "family": report.family,
        "scales": report.scales,
        "slopes": _slope_summary(slopes),
        "n_paths": paths,
        "seed": seed,
    })
    return manifest


def cmd_sensitivity(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "market", "tilt"),
                  ("eps_ladder", "identity_tol") + SHARED_KEYS[1:], "config")
    seed, paths, threads = _runtime(cfg, args)
    spec = _market_spec(cfg["market"])
    tilt = _tilt_spec(cfg["tilt"])
    eps_ladder = np.asarray(cfg.get("eps_ladder", [0.2, 0.1, 0.05, 0.025]),
                            dtype=float)
    if np.any(eps_ladder <= 0.0) or np.any(eps_ladder > 1.0):
        raise ConfigError("eps_ladder entries must lie in (0, 1]")
    tol = float(cfg.get("identity_tol", 1e-8))
    bundle = simulate_paths(spec, paths, seed, threads=threads)
    record = density_paths(bundle, tilt)
    identity_err = 0.0
    for eps in eps_ladder:
        quot = response_quotient(bundle, record, float(eps))
        identity_err = max(identity_err, float(
            np.max(np.abs(quot["direct"] - quot["formula"]))))
    first = first_order_check(bundle, record, eps_ladder)
    second = second_order_check(bundle, record, eps_ladder)
    rows = []
    for table, tag in ((first, "first"), (second, "second")):
        for i in range(len(eps_ladder)):
            rows.append({"ladder_index": i + 1, "metric": f"{tag}_fv",
                         "value": table["fv_error"][i],
                         "stderr": table["fv_stderr"][i]})
            rows.append({"ladder_index": i + 1, "metric": f"{tag}_qv",
                         "value": table["qv_error"][i],
                         "stderr": table["qv_stderr"][i]})
    _write_table(out_dir, manifest, "errors.csv",
                 ["ladder_index", "metric", "value", "stderr"], rows)
    manifest.record_check("response_identity", identity_err <= tol)
    payload = {
        "identity_max_error": identity_err,
        "identity_tol": tol,
        "eps_ladder": eps_ladder,
        "first_order": {"order_fv": first["order_fv"],
                        "order_qv": first["order_qv"],
                        "fv_ratios": first["fv_ratios"]},
        "second_order": {"order_fv": second["order_fv"],
                         "order_qv": second["order_qv"]},
        "n_paths": paths,
        "seed": seed,
    }
    for tag, table in (("first", first), ("second", second)):
        for key in ("order_fv", "order_qv"):
            order = table[key]
            if order is not None:
                manifest.record_check(f"{tag}_{key}_in_range",
                                      0.8 <= order <= 1.2)
    _write_summary(out_dir, manifest, payload)
    return manifest


def cmd_counterexample(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "p"),
                  ("levels", "quad_nodes", "quad_range", "signal_mean",
                   "theta_tol") + SHARED_KEYS[1:], "config")
    p = float(cfg["p"])
    levels = [int(n) for n in cfg.get("levels", range(1, 9))]
    kwargs = {}
    for key in ("quad_nodes", "quad_range", "signal_mean"):
        if key in cfg:
            kwargs[key] = cfg[key]
    report = discontinuity_report(p, levels, **kwargs)
    limit = one_period_optimal(OnePeriodMarket(p=p, level=None))
    rows = [{"level": n, "theta_star": t, "gap": g}
            for n, t, g in zip(report["level"], report["theta_star"],
                               report["gap"])]
    _write_table(out_dir, manifest, "gaps.csv",
                 ["level", "theta_star", "gap"], rows)
    theta_tol = float(cfg.get("theta_tol", 1e-3))
    theta_max = max(abs(t) for t in report["theta_star"])
    manifest.record_check("theta_near_zero", theta_max <= theta_tol)
    _write_summary(out_dir, manifest, {
        "p": p,
        "theta_max": theta_max,
        "limit_wealth_values": limit.wealth_values,
        "limit_wealth_probs": limit.wealth_probs,
        "expected_gap": abs(2.0 * p - 1.0),
    })
    return manifest


def cmd_tree(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "depth", "chi"),
                  ("up_probs", "clock_increments", "caps") + SHARED_KEYS[1:],
                  "config")
    depth = _positive_int(cfg["depth"], "depth")
    try:
        tree = ScenarioTree(
            depth=depth,
            up_probs=None if cfg.get("up_probs") is None
            else np.asarray(cfg["up_probs"], dtype=float),
            clock_increments=None if cfg.get("clock_increments") is None
            else np.asarray(cfg["clock_increments"], dtype=float),
        )
    except InvalidSpec as exc:
        raise ConfigError(f"bad tree config: {exc}") from exc
    chi_cfg = cfg["chi"]
    _require_keys(chi_cfg, (), ("leaf_indicator", "values"), "chi")
    if ("leaf_indicator" in chi_cfg) == ("values" in chi_cfg):
        raise ConfigError("chi needs exactly one of leaf_indicator, values")
    if "leaf_indicator" in chi_cfg:
        idx = int(chi_cfg["leaf_indicator"])
        if not 0 <= idx < tree.n_scenarios:
            raise ConfigError(f"leaf_indicator {idx} out of range")
        chi = np.zeros(tree.n_scenarios)
        chi[idx] = 1.0
    else:
        chi = np.asarray(chi_cfg["values"], dtype=float)
    caps = [int(n) for n in cfg.get("caps", range(depth + 1))]
    conv = tree_projection_convergence(tree, chi, caps)
    expected = conv["expected"]
    rows = [{"cap": n, "expected_gap": g} for n, g in zip(caps, expected)]
    _write_table(out_dir, manifest, "projection.csv",
                 ["cap", "expected_gap"], rows)
    manifest.record_check("monotone",
                          bool(np.all(np.diff(expected) <= 1e-12)))
    if caps[-1] == depth:
        manifest.record_check("zero_at_full_cap",
                              bool(abs(expected[-1]) <= 1e-12))
    _write_summary(out_dir, manifest, {
        "depth": depth, "caps": caps, "expected_gaps": expected,
    })
    return manifest


def cmd_density_check(cfg, args, out_dir, manifest):
    _require_keys(cfg, ("kind", "family"),
                  ("vols", "sizes", "kappa", "n_steps", "horizon")
                  + SHARED_KEYS[1:], "config")
    seed, paths, _ = _runtime(cfg, args)
    family = cfg["family"]
    n_steps = _positive_int(cfg.get("n_steps", 256), "n_steps")
    horizon = float(cfg.get("horizon", 1.0))
    if family == "lognormal":
        if "vols" not in cfg:
            raise ConfigError("lognormal family needs vols")
        vols = np.asarray(cfg["vols"], dtype=float)
        z_list = lognormal_density_ladder(vols, paths, n_steps, horizon, seed)
        scales = vols
    elif family == "excursion":
        if "sizes" not in cfg:
            raise ConfigError("excursion family needs sizes")
        sizes = np.asarray(cfg["sizes"], dtype=float)
        kappa = float(cfg.get("kappa", 1.0))
        z_list = excursion_density_ladder(sizes, kappa, paths, n_steps,
                                          horizon, seed)
        scales = 1.0 / sizes
    else:
        raise ConfigError(f"unknown density family: {family!r}")
    table = density_sequence_check(z_list)
    rows = []
    for name in ("z_l1", "z_sup", "zz_qv", "rr_qv"):
        for i in range(len(z_list)):
            rows.append({"ladder_index": i + 1, "metric": name,
                         "value": table[name][i],
                         "stderr": table["stderr"][name][i]})
    _write_table(out_dir, manifest, "density.csv",
                 ["ladder_index", "metric", "value", "stderr"], rows)
    report = LadderReport(family=f"density-{family}",
                          indices=np.arange(1, len(z_list) + 1),
                          scales=np.asarray(scales, dtype=float),
                          per_path=table["per_path"])
    slopes = report.slopes()
    for name, res in slopes.items():
        manifest.record_check(f"decay:{name}", res["passed"])
    _write_summary(out_dir, manifest, {
        "family": family,
        "slopes": _slope_summary(slopes),
        "n_paths": paths,
        "seed": seed,
    })
    return manifest


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "sensitivity": cmd_sensitivity,
    "counterexample": cmd_counterexample,
    "tree": cmd_tree,
    "density-check": cmd_density_check,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="growthlab",
        description="Constrained growth-optimal portfolios and their "
                    "stability under perturbed information, measure, and "
                    "constraints.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML or JSON config")
    common.add_argument("--seed", type=int, default=None,
                        help="64-bit seed (overrides config)")
    common.add_argument("--paths", type=int, default=None,
                        help="Monte Carlo paths (overrides config)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(args):
    cfg = _load_config(args.config)
    kind = cfg.get("kind")
    allowed = CONFIG_KINDS[args.command]
    if kind not in allowed:
        raise ConfigError(
            f"config kind {kind!r} does not fit subcommand {args.command!r} "
            f"(expected one of {', '.join(allowed)})")
    out_dir = args.out if args.out is not None else f"growthlab-{args.command}"
    os.makedirs(out_dir, exist_ok=True)
    seed, paths, threads = _runtime(cfg, args)
    manifest = RunManifest(config=cfg, seed=seed, version=__version__)
    COMMANDS[args.command](cfg, args, out_dir, manifest)
    return _finish(manifest, out_dir)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ThresholdFailure as exc:
        print(f"threshold failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, InvalidSpec, DimensionMismatch, InfeasibleConstraint,
            NonNestedPartitions, UnsupportedSignalModel) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, DensityFloorHit, QuadratureUnderResolved) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except GrowthlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
