"""Experiment driver.

Subcommands: run, ras, schedule, omni, evidence, diagnose.  Options come from
an optional JSON config file plus command-line flags; flags win.  All
randomness derives from the mandatory --seed, so a given (config, seed) pair
produces byte-identical artifacts regardless of worker count.

Exit codes: 0 success, 2 configuration error, 3 sampler-contract violation.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import bounds, diagnostics, engine, ising, l1ball, omnithermal, schedules
from .errors import CorruptSamplerError, NestmcError, RunawayRunError
from .families import ExpIntervalFamily

OUT_DIR_ENV = "NESTMC_OUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SAMPLER = 3


class ConfigError(Exception):
    pass


def _write_json(payload, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _merged(args) -> dict:
    """Config-file values overlaid with explicitly-set flags."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        cfg[key] = value
    return cfg


def _require(cfg, key, mode):
    if cfg.get(key) is None:
        raise ConfigError(f"{mode} mode requires '{key}'")
    return cfg[key]


def _out_dir(cfg) -> Path:
    out = cfg.get("out_dir") or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_family(cfg):
    name = cfg.get("family")
    if name is None:
        raise ConfigError("a family is required (expinterval | ising | l1ball)")
    try:
        if name == "expinterval":
            return ExpIntervalFamily(
                beta_shell=float(cfg.get("shell", 0.0)),
                beta_center=float(cfg.get("center", -1.0)),
            )
        if name == "ising":
            if cfg.get("edge_file"):
                graph = ising.LatticeGraph.from_edge_list_file(cfg["edge_file"])
            else:
                graph = ising.LatticeGraph.lattice(
                    int(_require(cfg, "width", "ising")),
                    int(_require(cfg, "height", "ising")),
                    periodic=bool(cfg.get("periodic", False)),
                )
            return ising.GibbsFamily(graph, float(_require(cfg, "beta", "ising")))
        if name == "l1ball":
            dim = int(_require(cfg, "dim", "l1ball"))
            center_point = cfg.get("center_point") or [0.0] * dim
            if isinstance(center_point, str):
                center_point = [float(v) for v in center_point.split(",")]
            return l1ball.ExpL1BallFamily(
                dimension=dim,
                center=center_point,
                center_radius=float(_require(cfg, "center_radius", "l1ball")),
                shell_radius=float(_require(cfg, "shell_radius", "l1ball")),
                norm=cfg.get("norm", "l1"),
            )
    except (ValueError, OSError, NestmcError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown family {name!r}")


def _run_pool(family, cfg):
    k = int(_require(cfg, "k", cfg["command"]))
    seed = int(_require(cfg, "seed", cfg["command"]))
    traces = engine.run_batch(
        family,
        k,
        seed,
        n_jobs=int(cfg.get("jobs", 1)),
        max_steps=int(cfg.get("max_steps", engine.DEFAULT_MAX_STEPS)),
    )
    return traces, engine.pool_runs(traces, family)


def _estimate_payload(pool, alpha):
    est = engine.estimate_log_ratio(pool)
    exact = engine.exact_poisson_ci(pool, alpha)
    payload = {
        "schema": "nestmc/estimate-v1",
        "k": est.k,
        "N": est.N,
        "log_ratio": est.estimate,
        "ratio": math.exp(est.estimate),
        "variance": est.variance_estimate,
        "alpha": alpha,
        "exact_ci": {
            "log": [exact.log_lower, exact.log_upper],
            "ratio": [exact.lower, exact.upper],
        },
    }
    if est.N > 0:
        normal = engine.normal_ci(pool, alpha)
        payload["normal_ci"] = {
            "log": [normal.log_lower, normal.log_upper],
            "ratio": [normal.lower, normal.upper],
        }
    else:
        payload["normal_ci"] = None
    return payload


def cmd_run(cfg) -> int:
    family = _build_family(cfg)
    traces, pool = _run_pool(family, cfg)
    out = _out_dir(cfg)
    alpha = float(cfg.get("alpha", 0.05))
    _write_json(
        {
            "schema": "nestmc/traces-v1",
            "runs": [t.to_dict(i) for i, t in enumerate(traces)],
        },
        out / "traces.json",
    )
    _write_json(pool.to_dict(), out / "pool.json")
    _write_json(_estimate_payload(pool, alpha), out / "estimate.json")
    step = omnithermal.counting_process(pool)
    anchor = _log_center_measure(family, cfg)
    if anchor is not None:
        # Descending staircase of Z_hat(beta), exact at the center.
        omnithermal.curve_to_csv(
            omnithermal.anchored_partition_curve(step, anchor), out / "staircase.csv"
        )
    else:
        omnithermal.curve_to_csv(step, out / "staircase.csv")
    return EXIT_OK


def cmd_ras(cfg) -> int:
    family = _build_family(cfg)
    try:
        config = bounds.RasConfig(
            float(_require(cfg, "epsilon", "ras")), float(_require(cfg, "delta", "ras"))
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = bounds.run_ras(
        family,
        config,
        int(_require(cfg, "seed", "ras")),
        n_jobs=int(cfg.get("jobs", 1)),
    )
    payload = result.to_dict()
    payload["epsilon"] = config.epsilon
    payload["delta"] = config.delta
    _write_json(payload, _out_dir(cfg) / "ras.json")
    return EXIT_OK


def cmd_schedule(cfg) -> int:
    family = _build_family(cfg)
    _, pool = _run_pool(family, cfg)
    rung = int(cfg.get("rung_size") or pool.k)
    schedule = schedules.build_schedule(pool, rung)
    out = _out_dir(cfg)
    schedules.schedule_to_csv(schedule, out / "schedule.csv")
    payload = {
        "schema": "nestmc/schedule-v1",
        "rung_size": rung,
        "n_rungs": len(schedule) - 1,
        "pool_N": pool.N,
    }
    if family.has_log_measure:
        quality = schedules.schedule_quality(schedule, family.log_measure)
        payload["quality"] = {
            "gaps": [float(g) for g in quality.gaps],
            "full_rung_mean": quality.mean,
            "full_rung_sd": quality.sd,
        }
    _write_json(payload, out / "schedule.json")
    return EXIT_OK


def _log_center_measure(family, cfg):
    if cfg.get("log_center_measure") is not None:
        return float(cfg["log_center_measure"])
    if family.has_log_measure:
        return family.log_measure(family.beta_center)
    return None


def cmd_omni(cfg) -> int:
    family = _build_family(cfg)
    _, pool = _run_pool(family, cfg)
    out = _out_dir(cfg)
    step = omnithermal.counting_process(pool)
    anchor = _log_center_measure(family, cfg)
    if anchor is not None:
        omnithermal.curve_to_csv(
            omnithermal.anchored_partition_curve(step, anchor), out / "curve.csv"
        )
    else:
        omnithermal.curve_to_csv(step, out / "curve.csv")
    payload = _estimate_payload(pool, float(cfg.get("alpha", 0.05)))
    payload["schema"] = "nestmc/omni-v1"
    payload["anchored"] = anchor is not None
    if cfg.get("plan_epsilon") is not None:
        plan_delta = float(cfg.get("plan_delta", cfg.get("delta") or 0.05))
        lam_upper = cfg.get("plan_lambda")
        if lam_upper is None:
            lam_upper = engine.exact_poisson_ci(pool, plan_delta).log_upper
        try:
            payload["plan"] = omnithermal.plan_runs(
                float(cfg["plan_epsilon"]), plan_delta, float(lam_upper)
            ).to_dict()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    _write_json(payload, out / "omni.json")
    return EXIT_OK


def cmd_evidence(cfg) -> int:
    family = _build_family(cfg)
    out = _out_dir(cfg)
    seed = int(_require(cfg, "seed", "evidence"))
    if isinstance(family, l1ball.ExpL1BallFamily):
        result = l1ball.evidence_estimate(
            family,
            int(_require(cfg, "k", "evidence")),
            int(cfg.get("n_center", 10_000)),
            seed,
            n_jobs=int(cfg.get("jobs", 1)),
        )
        _write_json(result.to_dict(), out / "evidence.json")
        return EXIT_OK
    if isinstance(family, ising.GibbsFamily):
        _, pool = _run_pool(family, cfg)
        anchor = family.graph.n_vertices * math.log(2.0)
        curve = omnithermal.anchored_partition_curve(pool, anchor)
        b_max = float(cfg.get("b_max", family.beta_shell))
        quad_step = float(cfg.get("quad_step", 0.01))
        observed = cfg.get("observed_energy")
        if observed is None:
            # Default observation: the all-zeros ground state.
            observed = -(1 + family.graph.n_edges)
        prior = lambda b: 1.0 / b_max  # noqa: E731 - uniform prior on [0, b_max]
        try:
            quad = omnithermal.evidence_integral(
                curve, prior, float(observed), b_max, quad_step
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        omnithermal.curve_to_csv(curve, out / "curve.csv")
        _write_json(
            {
                "schema": "nestmc/evidence-v1",
                "value": quad["value"],
                "n_points": quad["n_points"],
                "step": quad["step"],
                "observed_energy": float(observed),
                "b_max": b_max,
                "k": pool.k,
                "N": pool.N,
            },
            out / "evidence.json",
        )
        return EXIT_OK
    raise ConfigError("evidence mode supports the l1ball and ising families")


def cmd_diagnose(cfg) -> int:
    family = _build_family(cfg)
    if not family.has_log_measure:
        raise ConfigError("diagnose mode needs a family with an analytic oracle")
    seed = int(_require(cfg, "seed", "diagnose"))
    k = int(_require(cfg, "k", "diagnose"))
    reps = int(cfg.get("reps", 100))
    significance = float(cfg.get("significance", 0.001))
    jobs = int(cfg.get("jobs", 1))
    lam = family.log_ratio_span()

    pools = []
    counts = []
    for r in range(reps):
        traces = engine.run_batch(family, k, seed, n_jobs=jobs, stream_key=(r,))
        pools.append(engine.pool_runs(traces, family))
        counts.extend(t.count for t in traces)

    spacing = diagnostics.spacing_diagnostic(pools[0], family, significance=significance)
    count_gof = diagnostics.poisson_count_test(counts, lam, significance=significance)
    increments = diagnostics.increment_independence_test(
        pools, family, significance=significance
    )
    payload = {
        "schema": "nestmc/diagnose-v1",
        "lambda": lam,
        "k": k,
        "reps": reps,
        "spacing_ks": spacing.to_dict(),
        "count_chisq": count_gof.to_dict(),
        "increments": increments.to_dict(),
        "all_passed": spacing.passed and count_gof.passed and increments.passed,
    }
    _write_json(payload, _out_dir(cfg) / "diagnose.json")
    print("spacing_ks:", "PASS" if spacing.passed else "FAIL")
    print("count_chisq:", "PASS" if count_gof.passed else "FAIL")
    print("increments:", "PASS" if increments.passed else "FAIL")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--family", choices=["expinterval", "ising", "l1ball"])
    p.add_argument("--seed", type=int, help="master seed (mandatory)")
    p.add_argument("--k", type=int, help="number of runs")
    p.add_argument("--jobs", type=int, help="parallel workers (default 1)")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--out-dir", dest="out_dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p.add_argument("--alpha", type=float, help="CI coverage complement (default 0.05)")
    # family parameters
    p.add_argument("--shell", type=float, help="expinterval shell parameter")
    p.add_argument("--center", type=float, help="expinterval center parameter")
    p.add_argument("--width", type=int, help="ising lattice width")
    p.add_argument("--height", type=int, help="ising lattice height")
    p.add_argument("--periodic", action="store_const", const=True, default=None)
    p.add_argument("--edge-file", dest="edge_file", help="ising edge-list file")
    p.add_argument("--beta", type=float, help="ising shell inverse temperature")
    p.add_argument("--dim", type=int, help="l1ball dimension")
    p.add_argument("--center-point", dest="center_point", help="comma-separated center")
    p.add_argument("--center-radius", dest="center_radius", type=float)
    p.add_argument("--shell-radius", dest="shell_radius", type=float)
    p.add_argument("--norm", choices=["l1", "linf"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nestmc",
        description="Nested-set Monte Carlo ratio estimation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="k runs: traces, pool, estimate, both CIs")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ras", help="two-phase (epsilon, delta) ratio estimate")
    _add_common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_ras)

    p = sub.add_parser("schedule", help="well-balanced cooling schedule CSV")
    _add_common(p)
    p.add_argument("--rung-size", dest="rung_size", type=int)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("omni", help="all-parameter step-function curve CSV")
    _add_common(p)
    p.add_argument("--plan-epsilon", dest="plan_epsilon", type=float)
    p.add_argument("--plan-delta", dest="plan_delta", type=float)
    p.add_argument("--plan-lambda", dest="plan_lambda", type=float)
    p.add_argument("--log-center-measure", dest="log_center_measure", type=float)
    p.set_defaults(func=cmd_omni)

    p = sub.add_parser("evidence", help="evidence estimate (l1ball or ising)")
    _add_common(p)
    p.add_argument("--n-center", dest="n_center", type=int)
    p.add_argument("--b-max", dest="b_max", type=float)
    p.add_argument("--quad-step", dest="quad_step", type=float)
    p.add_argument("--observed-energy", dest="observed_energy", type=float)
    p.set_defaults(func=cmd_evidence)

    p = sub.add_parser("diagnose", help="statistical test battery on a test family")
    _add_common(p)
    p.add_argument("--reps", type=int)
    p.add_argument("--significance", type=float)
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merged(args)
        cfg["command"] = args.command
        if cfg.get("seed") is None:
            raise ConfigError("--seed is mandatory (reproducibility contract)")
        return args.func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorruptSamplerError, RunawayRunError) as exc:
        print(f"sampler contract violated: {exc}", file=sys.stderr)
        return EXIT_SAMPLER


if __name__ == "__main__":
    sys.exit(main())
