"""Command-line entry point: ``ideallimits {density,limits,subsample}``.

Every run writes a JSON report ``{"header": ..., "config": ..., "result": ...}``.
Only ``header`` carries run-specific data (timestamp, version, worker count,
output paths), so two runs with the same resolved config produce
byte-identical text outside the header. Options may also come from ``--config FILE`` (``key = value`` lines);
explicit flags win.

Exit codes: 0 ok, 1 usage error, 2 runtime error, 3 inconclusive verdict
under ``--strict``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys

from . import __version__
from .ideal import IdealSpec, geometric_schedule, membership_verdict, parse_set_descriptor, upper_alpha_density
from .limit_points import DEFAULT_EPS_SCHEDULE, IdealLimitPointEstimator
from .sequences import parse_sequence_descriptor
from .subsequences import lambda_agreement_experiment, lambda_gamma_zero_one_experiment

log = logging.getLogger("ideallimits")

CACHE_ENV = "IDEALLIMITS_CACHE_DIR"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _int(text) -> int:
    return int(float(text))


# option name -> (type, default) per command; defaults are the documented ones
COMMON = {
    "out": (str, None),
    "cache_dir": (str, None),
    "strict": (bool, False),
}
DEFAULTS = {
    "density": {"alpha": (float, 0.0), "N": (_int, 1_000_000), "schedule_points": (_int, 20), **COMMON},
    "limits": {
        "ideal": (str, "alpha:0"),
        "q": (float, 0.02),
        "N": (_int, 1_000_000),
        "eps": (_floats, list(DEFAULT_EPS_SCHEDULE)),
        "grid_size": (_int, 201),
        "cluster_threshold": (float, None),
        "block_slack": (float, 0.05),
        "delta": (float, 0.01),
        **COMMON,
    },
    "subsample": {
        "ideal": (str, "alpha:0"),
        "q": (float, 0.02),
        "N": (_int, 1_000_000),
        "M": (_int, 100),
        "seed": (_int, 0),
        "experiment": (str, "agreement"),
        "eps": (_floats, list(DEFAULT_EPS_SCHEDULE)),
        "block_slack": (float, 0.05),
        "delta": (float, 0.01),
        "score_scale": (float, 0.4),
        "jobs": (_int, 1),
        "csv": (str, None),
        **COMMON,
    },
}


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ideallimits", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--cache-dir", help=f"sieve cache directory (env {CACHE_ENV})")
        sp.add_argument("--strict", action="store_true", default=argparse.SUPPRESS, help="exit 3 on inconclusive verdicts")

    d = sub.add_parser("density", help="upper alpha-density of a set literal", argument_default=argparse.SUPPRESS)
    d.add_argument("set", help="evens, multiples:5, squares, powers:2, primes, lpf-level:p, or a file")
    d.add_argument("--alpha", type=float)
    d.add_argument("--N", type=_int)
    d.add_argument("--schedule-points", type=_int)
    common(d)

    lim = sub.add_parser("limits", help="ideal limit and cluster points of a sequence", argument_default=argparse.SUPPRESS)
    lim.add_argument("sequence", help="lpf, convergent:<ell>, constant:<c>, alternating, file:<path>")
    lim.add_argument("--ideal")
    lim.add_argument("--q", type=float)
    lim.add_argument("--N", type=_int)
    lim.add_argument("--eps", type=_floats, help="comma-separated, strictly decreasing")
    lim.add_argument("--grid-size", type=_int)
    lim.add_argument("--cluster-threshold", type=float)
    lim.add_argument("--block-slack", type=float)
    lim.add_argument("--delta", type=float)
    common(lim)

    s = sub.add_parser("subsample", help="Monte Carlo experiments over random subsequences", argument_default=argparse.SUPPRESS)
    s.add_argument("sequence")
    s.add_argument("--ideal")
    s.add_argument("--q", type=float)
    s.add_argument("--N", type=_int)
    s.add_argument("--M", type=_int)
    s.add_argument("--seed", type=_int)
    s.add_argument("--experiment", choices=["agreement", "zero-one"])
    s.add_argument("--eps", type=_floats)
    s.add_argument("--block-slack", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--score-scale", type=float)
    s.add_argument("--jobs", type=_int, help="worker processes; results do not depend on it")
    s.add_argument("--csv", help="also write one CSV row per sample here")
    common(s)
    return p


def resolve_config(command: str, ns: argparse.Namespace) -> dict:
    spec = DEFAULTS[command]
    cfg = {k: default for k, (_, default) in spec.items()}
    given = vars(ns)
    if given.get("config"):
        for key, raw in read_config_file(given["config"]).items():
            if key not in spec:
                raise UsageError(f"unknown config key {key!r} for {command}")
            conv = spec[key][0]
            try:
                cfg[key] = _parse_bool(raw) if conv is bool else conv(raw)
            except ValueError:
                raise UsageError(f"bad value {raw!r} for config key {key!r}") from None
    for key in spec:
        if key in given and given[key] is not None:
            cfg[key] = given[key]
    if cfg.get("cache_dir") is None and os.environ.get(CACHE_ENV):
        cfg["cache_dir"] = os.environ[CACHE_ENV]
    return cfg


def _density(target: str, cfg: dict):
    S = parse_set_descriptor(target, cfg["N"], cache_dir=cfg["cache_dir"])
    est = upper_alpha_density(S, cfg["alpha"], geometric_schedule(cfg["N"], cfg["schedule_points"]))
    verdict = membership_verdict(est.value)
    result = {"set": target, **est.to_dict(), "verdict": verdict.value}
    return result, verdict.value == "inconclusive"


def _limits(target: str, cfg: dict):
    x = parse_sequence_descriptor(target, cfg["N"], cache_dir=cfg["cache_dir"])
    est = IdealLimitPointEstimator(
        ideal=cfg["ideal"],
        q=cfg["q"],
        eps_schedule=tuple(cfg["eps"]),
        cluster_threshold=cfg["cluster_threshold"],
        grid_size=cfg["grid_size"],
        block_slack=cfg["block_slack"],
        delta=cfg["delta"],
    ).fit(x.values)
    result = est.report_.to_dict()
    result["lambda"] = est.limit_points_.tolist()
    result["lambda_representatives"] = est.representatives_.tolist()
    result["gamma_points"] = est.cluster_points_.tolist()
    return result, False


def _subsample(target: str, cfg: dict):
    x = parse_sequence_descriptor(target, cfg["N"], cache_dir=cfg["cache_dir"])
    spec = IdealSpec.parse(cfg["ideal"])
    kw = dict(
        M=cfg["M"],
        base_seed=cfg["seed"],
        delta=cfg["delta"],
        score_scale=cfg["score_scale"],
        eps_schedule=tuple(cfg["eps"]),
        n_jobs=cfg["jobs"],
    )
    if not spec.is_summable:
        # each subsequence is shorter than x, so each builds its own blocks
        kw["block_slack"] = cfg["block_slack"]
    run = lambda_agreement_experiment if cfg["experiment"] == "agreement" else lambda_gamma_zero_one_experiment
    res = run(x, spec, cfg["q"], **kw)
    if cfg["csv"]:
        with open(cfg["csv"], "w") as fh:
            fh.write(res.to_csv())
    inconclusive = cfg["experiment"] == "zero-one" and 0.1 < res.agreement_fraction < 0.9
    return res.to_dict(), inconclusive


COMMANDS = {"density": _density, "limits": _limits, "subsample": _subsample}


# options that change how a run executes but not what it computes
EXECUTION_KEYS = ("out", "csv", "cache_dir", "jobs", "strict")


def render_report(command: str, target: str, cfg: dict, result: dict, timestamp: str | None = None) -> str:
    """JSON report; run-specific fields live only in ``header``."""
    execution = {k: cfg[k] for k in EXECUTION_KEYS if k in cfg}
    config = {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}
    report = {
        "header": {
            "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "version": __version__,
            "execution": execution,
        },
        "config": {"command": command, "target": target, "version": __version__, **config},
        "result": result,
    }
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def strip_header(text: str) -> str:
    """Report text with the ``header`` block removed, for byte comparisons."""
    lines = text.splitlines(keepends=True)
    start = lines.index('  "header": {\n')
    end = lines.index("  },\n", start)
    return "".join(lines[:start] + lines[end + 1 :])


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        target = ns.set if ns.command == "density" else ns.sequence
        cfg = resolve_config(ns.command, ns)
    except OSError as exc:
        print(f"usage error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result, inconclusive = COMMANDS[ns.command](target, cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = render_report(ns.command, target, cfg, result)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if inconclusive and cfg["strict"]:
        log.warning("inconclusive verdict (strict mode)")
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
