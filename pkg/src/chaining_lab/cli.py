"""chaining-lab: generic chaining functionals, Orlicz norms and quadratic-process experiments.

Subcommands: gamma, merge, orlicz, simulate-tail, simulate-covariance, rate.
Exit status is 0 on success, 1 for invalid input, 2 for runtime failures.
"""
import argparse
import hashlib
import json
import os
import sys
import time

from . import __version__, _accel, chaining
from .config import parse_covariance_config, parse_space, parse_tail_config
from .covariance import corollary_experiment, desk_payload
from .empirical import rate_regression
from .errors import ChainingLabError, ConfigInvalid, DegenerateGrid, InputError
from .io import atomic_write, csv_text, json_text, read_csv, read_json, read_samples
from .orlicz import SampleSet, psi_alpha_empirical
from .seeding import MASK64

SEED_ENV = "CHAINING_LAB_SEED"


class UsageError(InputError):
    def __init__(self, message, usage):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


def _u64(text):
    value = int(text, 0)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_u64, help=f"master seed (falls back to ${SEED_ENV})")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for replications (never changes results)")

    parser = _Parser(prog="chaining-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("gamma", parents=[common], help="gamma_alpha of a subset of a metric space")
    p.add_argument("--space", required=True, help="JSON file {labels, dist}")
    p.add_argument("--subset", type=int, nargs="+", help="point indices (default: all)")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--method", choices=["exact", "greedy", "auto"], default="exact")

    p = sub.add_parser("merge", parents=[common], help="merge sequences for T1 and T2 and certify the bounds")
    p.add_argument("--space", required=True)
    p.add_argument("--t1", type=int, nargs="+", required=True)
    p.add_argument("--t2", type=int, nargs="+", required=True)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--method", choices=["exact", "greedy", "auto"], default="auto",
                   help="how the input sequences for T1 and T2 are built")

    p = sub.add_parser("orlicz", parents=[common], help="empirical psi_alpha norm of a sample file")
    p.add_argument("--samples", required=True, help="newline-delimited numbers")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("simulate-tail", parents=[common], help="quadratic-process tail experiment")
    p.add_argument("--config", required=True)

    p = sub.add_parser("simulate-covariance", parents=[common], help="sample-covariance corollary experiment")
    p.add_argument("--config", help="JSON config (default: the built-in desk configuration)")

    p = sub.add_parser("rate", parents=[common], help="log-log rate slope from a simulate-* CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--level", type=float, default=0.5, help="quantile level used as the median")
    return parser


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return None
    try:
        return _u64(raw.strip())
    except (ValueError, argparse.ArgumentTypeError):
        raise ConfigInvalid(f"{SEED_ENV}={raw!r} is not an unsigned 64-bit integer") from None


def _experiment_seed(args, payload):
    """``--seed`` beats the config's own seed, which beats the environment."""
    if args.seed is not None:
        return args.seed
    if isinstance(payload, dict) and "seed" in payload:
        return None
    return _env_seed()


def _load_json(path):
    try:
        return read_json(path)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: invalid JSON ({exc})") from None


def _cmd_gamma(args, seed):
    space = parse_space(_load_json(args.space))
    result = chaining.gamma(space, args.subset, args.alpha, args.method)
    return "json", result.to_dict(), {"space": args.space, "subset": args.subset, "alpha": args.alpha,
                                      "method": args.method}


def _cmd_merge(args, seed):
    space = parse_space(_load_json(args.space))
    seq_a = chaining.gamma(space, args.t1, args.alpha, args.method).sequence
    seq_b = chaining.gamma(space, args.t2, args.alpha, args.method).sequence
    cert = chaining.subadditivity_certificate(space, args.t1, seq_a, args.t2, seq_b)
    return "json", cert.to_dict(), {"space": args.space, "t1": args.t1, "t2": args.t2, "alpha": args.alpha,
                                    "method": args.method}


def _cmd_orlicz(args, seed):
    est = psi_alpha_empirical(SampleSet(read_samples(args.samples)), args.alpha, args.tol)
    return "json", est.to_dict(), {"samples": args.samples, "alpha": args.alpha, "tol": args.tol}


def _report_csv(report):
    return csv_text(report.column_names(), report.rows())


def _cmd_simulate_tail(args, seed):
    payload = _load_json(args.config)
    cfg = parse_tail_config(payload, _experiment_seed(args, payload))
    from .empirical import tail_experiment

    report = tail_experiment(cfg, threads=args.threads)
    return "csv", _report_csv(report), cfg.payload


def _cmd_simulate_covariance(args, seed):
    payload = _load_json(args.config) if args.config else desk_payload()
    cfg = parse_covariance_config(payload, _experiment_seed(args, payload))
    report = corollary_experiment(cfg, threads=args.threads)
    return "csv", _report_csv(report), cfg.payload


def _cmd_rate(args, seed):
    rows = [r for r in read_csv(args.csv) if float(r["level"]) == args.level]
    if not rows:
        raise DegenerateGrid(f"no rows at level {args.level} in {args.csv}")
    rows.sort(key=lambda r: int(r["n"]))
    n_grid = [int(r["n"]) for r in rows]
    medians = [float(r["quantile"]) for r in rows]
    slope, stderr = rate_regression(n_grid, medians)
    return "json", {"slope": slope, "stderr": stderr, "level": args.level, "n_grid": n_grid,
                    "medians": medians}, {"csv": args.csv, "level": args.level}


COMMANDS = {
    "gamma": _cmd_gamma,
    "merge": _cmd_merge,
    "orlicz": _cmd_orlicz,
    "simulate-tail": _cmd_simulate_tail,
    "simulate-covariance": _cmd_simulate_covariance,
    "rate": _cmd_rate,
}


def _digest(payload) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required", parser.format_usage())
        seed = args.seed
        started = time.perf_counter()
        kind, result, payload = COMMANDS[args.command](args, seed)
        text = result if kind == "csv" else json_text(result)
        if args.out:
            atomic_write(args.out, text)
            manifest = {
                "subcommand": args.command,
                "config_digest": _digest(payload),
                "tool_version": __version__,
                "backend": _accel.backend(),
                "seed": payload.get("seed", seed) if isinstance(payload, dict) else seed,
                "duration_s": time.perf_counter() - started,
                "outputs": [os.path.abspath(args.out)],
            }
            atomic_write(args.out + ".manifest.json", json_text(manifest))
        else:
            stdout.write(text)
        return 0
    except UsageError as exc:
        stderr.write(exc.usage)
        stderr.write(f"error: {exc}\n")
        return 1
    except ValueError as exc:
        # InputError subclasses ValueError; plain ValueErrors are bad parameters
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except (ChainingLabError, OSError, ArithmeticError) as exc:
        stderr.write(f"runtime error: {type(exc).__name__}: {exc}\n")
        return 2


def main():
    sys.exit(run())
