"""Command-line entry point.

    qlidar simulate --preset hsln --detector mapd --thresholds 1,2,3 --out hsln.csv
    qlidar oracle --config scenario.ini --format json

Exit status: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .decision import GEQ, GT, RULES, TIES_INCONCLUSIVE, TIES_SUCCESS
from .detectors import DetectorModel
from .errors import ConfigError, DomainError, NumericalError
from .scenario import (
    FORMATS,
    PRESETS,
    ScenarioConfig,
    combine_results,
    emit,
    load_config,
    parse_float_list,
    parse_int_list,
    run_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_scenario_args(p: argparse.ArgumentParser, simulate: bool):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="signal/noise regime")
    src.add_argument("--config", metavar="PATH", help="INI scenario file")
    p.add_argument("--sigma", metavar="LIST", help="scintillation log-sd, one value or a comma list")
    p.add_argument("--noise", choices=("thermal", "poisson"), help="background photon statistics")
    p.add_argument("--detector", choices=("ideal", "mapd"), help="detector model")
    p.add_argument("--M", type=_positive_int, dest="M", help="multiplexed elements (mapd)")
    p.add_argument("--eta", type=float, help="detection efficiency (mapd)")
    p.add_argument("--pd", type=float, help="dark-count probability per element and pulse (mapd)")
    p.add_argument("--thresholds", metavar="LIST", help="threshold grid, e.g. 1,2,5,10")
    p.add_argument("--nc", metavar="LIST", help="repetition grid, e.g. 1,2,4,8")
    p.add_argument("--rule", choices=RULES, help="vote rule over the n_c iterations")
    p.add_argument("--compare", choices=(GEQ, GT), help="threshold test: count >= S or count > S")
    p.add_argument("--ties", choices=(TIES_INCONCLUSIVE, TIES_SUCCESS), help="verdict on an exact tie")
    p.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
    if simulate:
        p.add_argument("--runs", type=_positive_int, help="runs N per grid cell (default 2000)")
        p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads; output is identical for any value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlidar",
        description="Thresholded photon-counting LIDAR: two-bin identification success probability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="Monte Carlo estimate of P over an (S, n_c) grid")
    _add_scenario_args(sim, simulate=True)
    ora = sub.add_parser("oracle", help="exact P over an (S, n_c) grid, no sampling")
    _add_scenario_args(ora, simulate=False)
    return parser


def configs_from_args(args) -> list[ScenarioConfig]:
    if args.config:
        base, sigmas = load_config(args.config)
    else:
        base, sigmas = ScenarioConfig.from_preset(args.preset), (0.0,)
    if args.sigma is not None:
        sigmas = parse_float_list(args.sigma, "--sigma")
    changes = {}
    if args.noise:
        changes["noise_model"] = args.noise
    if args.thresholds:
        changes["thresholds"] = parse_int_list(args.thresholds, "--thresholds")
    if args.nc:
        changes["nc_values"] = parse_int_list(args.nc, "--nc")
    if args.format:
        changes["output_format"] = args.format
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed

    det = base.detector
    kind = args.detector or ("ideal" if det.is_ideal else "mapd")
    det_overrides = {k: v for k, v in (("M", args.M), ("eta", args.eta), ("p_d", args.pd)) if v is not None}
    if kind == "ideal":
        if det_overrides:
            raise ConfigError("--M/--eta/--pd require --detector mapd", field="detector")
        changes["detector"] = DetectorModel.ideal()
    else:
        current = det if not det.is_ideal else DetectorModel.multiplexed()
        params = {"M": current.M, "eta": current.eta, "p_d": current.p_d, **det_overrides}
        try:
            changes["detector"] = DetectorModel.multiplexed(**params)
        except DomainError as exc:
            raise ConfigError(str(exc), field="detector") from None

    pol = {}
    for attr in ("rule", "compare", "ties"):
        if getattr(args, attr):
            pol[attr] = getattr(args, attr)
    if getattr(args, "runs", None):
        pol["runs"] = args.runs
    if pol:
        changes["policy"] = replace(base.policy, **pol)

    if any(s < 0 for s in sigmas):
        raise ConfigError("sigma must be >= 0", field="--sigma")
    cfg = base.with_(**changes)
    return [cfg.with_(sigma=s) for s in sigmas]


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    simulate = args.command == "simulate"
    try:
        configs = configs_from_args(args)
        jobs = getattr(args, "jobs", 1)
        results = [run_scenario(cfg, workers=jobs, simulate=simulate) for cfg in configs]
        text = emit(combine_results(results), configs[0].output_format)
    except (ConfigError, DomainError) as exc:
        print(f"qlidar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qlidar: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"qlidar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()
    except OSError as exc:
        print(f"qlidar: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
