"""Command line entry point: ``glmvi {profiles,fig2,fig3,rate,estimate} ...``.

Exit codes: 0 success, 1 configuration/usage error, 2 solver non-convergence
(``estimate`` only).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from glmvi import harness
from glmvi.glm_model import GlmModel, Observations
from glmvi.links import Link
from glmvi.sa_estimator import SaConfig, run_sa, tune_kappa
from glmvi.saa_estimator import solve_saa
from glmvi.vi_core import unit_ball


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _int_list(text):
    return tuple(int(float(v)) for v in str(text).split(",") if v.strip())


def _float_list(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _links(text):
    return tuple(Link.parse(v) for v in str(text).split(",") if v.strip())


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# config-file key -> converter; keys double as argparse dests
CONFIG_KEYS = {
    "seed": int, "out": str, "scale": str, "links": _links, "n": int, "K": _int_list,
    "replications": int, "sigma": float, "lambdas": _float_list, "kappa_mode": str,
    "jobs": int, "timing": _bool, "tol": float, "input": str,
}


def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="glmvi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, experiment=True):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output CSV (default: stdout)")
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        if experiment:
            sp.add_argument("--scale", choices=("desk", "paper"), default=None)
            sp.add_argument("--links", type=_links, default=None)
            sp.add_argument("--n", type=int, default=None)
            sp.add_argument("--K", type=_int_list, default=None)
            sp.add_argument("--replications", type=int, default=None)
            sp.add_argument("--jobs", type=int, default=None)
            sp.add_argument("--tol", type=float, default=None)
            sp.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                            default=None, help="write 0 in wall_time_s for byte-reproducible output")

    common(sub.add_parser("profiles", help="h(t) and modulus curves"))
    sp = sub.add_parser("fig2", help="SA vs SAA on random-design observations")
    common(sp)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--kappa-mode", dest="kappa_mode", choices=("tuned", "analytic"), default=None)
    sp = sub.add_parser("fig3", help="single-observation arctan experiment")
    common(sp)
    sp.add_argument("--lambdas", type=_float_list, default=None)
    sp = sub.add_parser("rate", help="fit log-log error slopes")
    common(sp)
    sp.add_argument("--in", dest="input", default=None, help="fig2 CSV to fit (default: run fig2)")
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--kappa-mode", dest="kappa_mode", choices=("tuned", "analytic"), default=None)

    sp = sub.add_parser("estimate", help="estimate a signal from an observation CSV")
    common(sp, experiment=False)
    sp.add_argument("--data", required=True, help="CSV with columns eta_1..eta_n,y")
    sp.add_argument("--link", type=Link.parse, required=True)
    sp.add_argument("--method", choices=("sa", "saa"), default="saa")
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iters", dest="max_iters", type=int, default=200_000)
    sp.add_argument("--sigma", type=float, default=1.0, help="label noise used when tuning SA")
    return p


def _merge(args) -> dict:
    values = read_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        values[key] = val
    return values


def _experiment_config(command: str, values: dict) -> harness.ExperimentConfig:
    fields = {k: values[k] for k in ("links", "n", "K", "replications", "sigma", "lambdas",
                                     "kappa_mode", "tol", "jobs", "timing", "out") if k in values}
    if "seed" in values:
        fields["master_seed"] = values["seed"]
    scale = values.get("scale", "desk")
    if scale not in harness.SCALES:
        raise ConfigError(f"unknown scale {scale!r}")
    return harness.ExperimentConfig.at_scale(command, scale, **fields)


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)


def _load_observations(path) -> Observations:
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    if not names or "y" not in names:
        raise ConfigError("observation CSV needs eta_* columns and a y column")
    eta_cols = [c for c in names if c.startswith("eta_")]
    arr = np.atleast_1d(data)
    eta = np.column_stack([arr[c] for c in eta_cols])
    return Observations(eta, arr["y"])


def _estimate(values: dict) -> int:
    obs = _load_observations(values["data"])
    region = unit_ball(obs.n)
    link = values["link"]
    rng = np.random.default_rng(values.get("seed"))
    status = 0
    if values.get("method", "saa") == "saa":
        res = solve_saa(obs, link, region, values.get("kappa"), values["tol"],
                        values["max_iters"], rng)
        est = res.estimate
        if not res.converged:
            print(f"solver did not converge after {res.iterations} iterations "
                  f"(residual {res.residual:.3g})", file=sys.stderr)
            status = 2
    else:
        model = GlmModel.for_experiment(link, obs.n, values.get("sigma", 1.0))
        if link is Link.LOGISTIC and not np.all((obs.y == 0) | (obs.y == 1)):
            raise ConfigError("logistic data must have 0/1 labels")
        kappa = values.get("kappa")
        if kappa is None:
            if values.get("seed") is None:
                raise ConfigError("--seed or --kappa is required for the sa method")
            kappa = tune_kappa(model, obs, rng=rng)
        est = run_sa(model, None, SaConfig(kappa), observations=obs, region=region).estimate
    rows = [dict(index=i, value=v) for i, v in enumerate(est)]
    _emit(harness.write_csv(rows, ["index", "value"], values.get("out")), values.get("out"))
    return status


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise ConfigError("a subcommand is required")
        values = _merge(args)
        if args.command == "estimate":
            return _estimate(values)
        config = _experiment_config(args.command, values)
        out = values.get("out")
        if args.command == "profiles":
            rows = harness.run_profiles(config)
            text = harness.write_csv(rows, harness.PROFILE_COLUMNS, out)
        elif args.command == "fig2":
            text = harness.write_csv(harness.run_fig2(config), harness.EXPERIMENT_COLUMNS, out)
        elif args.command == "fig3":
            text = harness.write_csv(harness.run_fig3(config), harness.EXPERIMENT_COLUMNS, out)
        else:
            rows = harness.read_csv(values["input"]) if "input" in values else harness.run_fig2(config)
            text = harness.write_csv(harness.rate_table(rows), ["estimator", "link", "slope"], out)
        _emit(text, out)
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"glmvi: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
