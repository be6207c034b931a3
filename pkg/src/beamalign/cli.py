"""Command-line entry point: ``beamalign run|sweep|latency|validate``.

Exit codes: 0 success, 1 configuration error, 2 validation failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys

import numpy as np

from .config import ALGORITHMS, ExperimentConfig, load_config
from .errors import ConfigurationError
from .harness import (
    CSV_COLUMNS,
    MetricsSummary,
    emit_results,
    run_monte_carlo,
    validate,
    write_csv,
)
from .latency import exhaustive_latency, learning_latency

log = logging.getLogger("beamalign")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [experiment]/[array]/[hba]/[baselines]/[protocol] sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--runs", type=int, dest="n_runs")
    common.add_argument("--out", help="output file (directory for sweep); stdout if omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--algorithms", type=_csv_list(str), help=f"comma list from {','.join(ALGORITHMS)}")
    common.add_argument("--threads", type=int)
    common.add_argument("--n-beams", type=int)
    common.add_argument("--n-paths", type=int)
    common.add_argument("--distance", type=float, dest="distance_m")
    common.add_argument("--horizon", type=int)
    common.add_argument("--sigma-db", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="beamalign", description="Bandit beam alignment simulator.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("run", parents=[common], help="single Monte-Carlo experiment")

    s = sub.add_parser("sweep", parents=[common], help="grid over beams, paths, distance and prior ratio")
    s.add_argument("--grid-beams", type=_csv_list(int))
    s.add_argument("--grid-paths", type=_csv_list(int))
    s.add_argument("--grid-distances", type=_csv_list(float))
    s.add_argument("--grid-ratios", type=_csv_list(float))

    lat = sub.add_parser("latency", parents=[common], help="802.11ad latency table, exhaustive vs HBA")
    lat.add_argument("--grid-beams", type=_csv_list(int), default=[16, 32, 64, 128, 256])
    lat.add_argument("--users", type=_csv_list(int), default=[1, 4])

    v = sub.add_parser("validate", parents=[common], help="channel-structure and tree-invariant suites")
    v.add_argument("--channels", type=int, default=100)
    v.add_argument("--episodes", type=int, default=20)
    v.add_argument("--inject-fault", action="store_true", help="corrupt one replayed reward (self-test)")
    return p


_OVERRIDES = ("seed", "n_runs", "algorithms", "threads", "n_beams", "n_paths", "distance_m", "horizon", "sigma_db")


def resolve_config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if args.config:
        return load_config(args.config, **overrides)
    return ExperimentConfig(**overrides)


def _emit(summary: MetricsSummary, args, path=None) -> None:
    path = path or args.out
    if path:
        emit_results(summary, args.format, path)
        log.info("wrote %s", path)
    elif args.format == "csv":
        write_csv(summary, sys.stdout)
    else:
        import json
        json.dump(summary.to_dict(), sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")


def cmd_run(args) -> int:
    config = resolve_config(args)
    summary = run_monte_carlo(config)
    for name, s in summary.algorithms.items():
        log.info("%-10s regret@T=%.3f measurements=%.1f accuracy=%.3f latency=%.3f ms",
                 name, s.regret_mean[-1], s.measurements_mean, s.accuracy, s.latency_ms_mean)
    _emit(summary, args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = resolve_config(args)
    grid = itertools.product(
        args.grid_beams or [config.n_beams],
        args.grid_paths or [config.n_paths],
        args.grid_distances or [config.distance_m],
        args.grid_ratios or [config.prior_ratio],
    )
    outdir = args.out or "."
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {outdir}: {exc.strerror}") from exc
    for n, paths, dist, eta in grid:
        point = config.replace(n_beams=n, n_paths=paths, distance_m=dist, prior_ratio=eta)
        summary = run_monte_carlo(point)
        name = f"N{n}_L{paths}_d{dist:g}_eta{eta:g}.{args.format}"
        _emit(summary, args, os.path.join(outdir, name))
        print(name)
    return EXIT_OK


def latency_rows(config: ExperimentConfig, beams, users):
    """Rows ``(algorithm, metric, index, value, p05, p95)`` with index = N."""
    for n in beams:
        point = config.replace(n_beams=n, algorithms=("hba",))
        s = run_monte_carlo(point).algorithms["hba"]
        for u in users:
            ex = exhaustive_latency(n, u, config.protocol).total_ms
            yield ("exhaustive", f"latency_ms_users{u}", n, ex, ex, ex)
            lat = [learning_latency(m, u, config.protocol).total_ms
                   for m in (s.measurements_mean, s.measurements_p05, s.measurements_p95)]
            yield ("hba", f"latency_ms_users{u}", n, *lat)
        yield ("hba", "measurements", n, s.measurements_mean, s.measurements_p05, s.measurements_p95)


def cmd_latency(args) -> int:
    import csv
    config = resolve_config(args)
    rows = list(latency_rows(config, args.grid_beams, args.users))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([f"{x:.6g}" if isinstance(x, (float, np.floating)) else x for x in r])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_validate(args) -> int:
    config = resolve_config(args)
    report = validate(config, args.channels, args.episodes, args.inject_fault)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VALIDATION


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "latency": cmd_latency, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
