"""Command-line entry point.

Subcommands: sample (sequence generation), discrepancy (uniformity metrics
as JSON lines), optimize (one DE run), bench (the paired experiment), and
report (Table-style summary of a records file). Machine-readable output
goes to stdout or files; logging and the resolved-config echo go to stderr.
Exit codes: 0 success, 2 usage or configuration error, 3 state error.
"""

import argparse
import hashlib
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .bench import (
    BENCH_DEFAULT_FUNCTIONS,
    FUNCTION_NAMES,
    format_summary_table,
    load_records,
    run_experiment,
    run_trial,
    summarize,
)
from .core import (
    Bounds,
    GaussianWeightSpec,
    HdsConfig,
    hds_generate,
    normalize,
    sequence_to_csv,
    sequence_to_json,
)
from .discrepancy import report as discrepancy_report
from .errors import ConfigurationError, StateError
from .sobol import SobolEngine


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigurationError(f"expected 'lo,hi', got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    return lo, hi


def _parse_floats(text: str) -> np.ndarray:
    return np.asarray([float(v) for v in text.split(",")])


def _parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _resolve_bounds(args, dims: int) -> Bounds:
    if getattr(args, "bounds_file", None):
        rows = []
        with open(args.bounds_file) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(_parse_pair(line))
        if len(rows) != dims:
            raise ConfigurationError(
                f"bounds file has {len(rows)} rows but dims={dims}"
            )
        arr = np.asarray(rows)
        return Bounds(arr[:, 0], arr[:, 1])
    if getattr(args, "bounds", None):
        lo, hi = _parse_pair(args.bounds)
        return Bounds.cube(lo, hi, dims)
    return Bounds.unit(dims)


def _echo_config(subcommand: str, args: argparse.Namespace) -> None:
    resolved = {"subcommand": subcommand, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        resolved[key] = value
    print("#config " + json.dumps(resolved), file=sys.stderr)


def _open_out(path):
    return open(path, "w") if path else sys.stdout


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_sample(args) -> int:
    bounds = _resolve_bounds(args, args.dims)
    weights = None
    if (args.weights_mean is None) != (args.weights_std is None):
        raise ConfigurationError("--weights-mean and --weights-std must be given together")
    if args.weights_mean is not None:
        mean = _parse_floats(args.weights_mean)
        std = _parse_floats(args.weights_std)
        if mean.size != args.dims or std.size != args.dims:
            raise ConfigurationError("weight vectors must have length dims")
        weights = GaussianWeightSpec(mean=mean, stddev=std)

    if args.method == "sobol":
        if weights is not None:
            raise ConfigurationError("Gaussian weights apply only to the hds method")
        points = SobolEngine(args.dims).draw(args.n)
        if not args.normalize:
            points = points * bounds.range + bounds.lower
    else:
        config = HdsConfig(
            n_samples=args.n,
            dims=args.dims,
            bounds=bounds,
            seed=args.seed,
            weights=weights,
            normalize=args.normalize,
        )
        points = hds_generate(config)

    frame = "unit" if args.normalize else "bounds"
    fh = _open_out(args.out)
    try:
        if args.format == "csv":
            sequence_to_csv(points, fh)
        else:
            sequence_to_json(points, frame, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _load_sequence(path: str) -> np.ndarray:
    with open(path) as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "{":
            payload = json.load(fh)
            return np.asarray(payload["samples"], dtype=np.float64)
        header = fh.readline()
        if not header.startswith("x0"):
            raise ConfigurationError(f"{path} is neither a sequence CSV nor JSON")
        return np.loadtxt(fh, delimiter=",", ndmin=2)


def _cmd_discrepancy(args) -> int:
    samples = _load_sequence(getattr(args, "in"))
    if args.bounds:
        lo, hi = _parse_pair(args.bounds)
        samples = normalize(samples, Bounds.cube(lo, hi, samples.shape[1]))
    metrics = args.metrics.split(",")
    fh = _open_out(args.out)
    try:
        for metric in metrics:
            fh.write(discrepancy_report(samples, metric).to_json() + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _cmd_optimize(args) -> int:
    method = {"hds": "HDS", "sobol": "Sobol"}[args.method]
    record = run_trial(
        method=method,
        function=args.function,
        dims=args.dims,
        n=args.n,
        trial=args.seed,
        base_seed=0,
        max_iter=args.max_iter,
    )
    fh = _open_out(args.out)
    try:
        if args.format == "json":
            fh.write(record.to_json() + "\n")
        else:
            from .de import CSV_HEADER

            fh.write(CSV_HEADER + "\n" + record.to_csv_row() + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _bench_config_hash(args) -> str:
    payload = json.dumps(
        {
            "functions": args.functions,
            "dims": args.dims,
            "sizes": args.sizes,
            "trials": args.trials,
            "seed": args.seed,
            "max_iter": args.max_iter,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _cmd_bench(args) -> int:
    functions = args.functions.split(",") if args.functions else list(BENCH_DEFAULT_FUNCTIONS)
    args.functions = ",".join(functions)
    dims_list = _parse_ints(args.dims)
    sizes = _parse_ints(args.sizes)

    os.makedirs(args.out_dir, exist_ok=True)
    records_path = os.path.join(args.out_dir, "records.csv")
    meta_path = os.path.join(args.out_dir, "meta.json")
    summary_path = os.path.join(args.out_dir, "summary.json")
    config_hash = _bench_config_hash(args)

    if os.path.exists(records_path):
        if not args.resume:
            raise StateError(
                f"{records_path} exists; pass --resume to continue or remove it first"
            )
        if not os.path.exists(meta_path):
            raise StateError("cannot resume: meta.json with the config hash is missing")
        with open(meta_path) as fh:
            stored = json.load(fh)
        if stored.get("config_hash") != config_hash:
            raise StateError("cannot resume: existing results were produced by a different config")
    with open(meta_path, "w") as fh:
        json.dump({"config_hash": config_hash, "version": __version__}, fh)

    records = run_experiment(
        functions=functions,
        dims_list=dims_list,
        sample_sizes=sizes,
        trials=args.trials,
        base_seed=args.seed,
        out_csv=records_path,
        max_iter=args.max_iter,
        workers=args.workers,
    )
    summaries = summarize(records, bootstrap_seed=args.seed)
    payload = [s.to_dict() for s in summaries]
    with open(summary_path, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(json.dumps(payload))
    print(format_summary_table(summaries), file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    records = load_records(args.records)
    summaries = summarize(records, bootstrap_seed=args.seed)
    if args.format == "json":
        print(json.dumps([s.to_dict() for s in summaries]))
    else:
        print(format_summary_table(summaries))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

# lets values like "-100,100" pass as arguments instead of being read as flags
_NEGATIVE_VALUE = re.compile(r"^-\d+[\d.,eE+-]*$")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hds", description=__doc__)
    parser._negative_number_matcher = _NEGATIVE_VALUE
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sample", help="generate an HDS or Sobol sequence")
    p.add_argument("--method", choices=("hds", "sobol"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--bounds", help="lo,hi broadcast to all dimensions")
    p.add_argument("--bounds-file", help="file with one lo,hi line per dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights-mean", help="comma-separated Gaussian weight means")
    p.add_argument("--weights-std", help="comma-separated Gaussian weight stddevs")
    p.add_argument("--normalize", action="store_true", help="emit unit-cube coordinates")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("discrepancy", help="uniformity metrics of a sequence file")
    p.add_argument("--in", required=True, help="sequence file (csv or json)")
    p.add_argument("--metrics", default="L2Star,CenteredL2")
    p.add_argument("--bounds", help="lo,hi of the sequence frame, to normalize first")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_discrepancy)

    p = sub.add_parser("optimize", help="single differential-evolution run")
    p.add_argument("--method", choices=("hds", "sobol"), required=True)
    p.add_argument("--function", choices=FUNCTION_NAMES, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("bench", help="paired HDS-vs-Sobol experiment")
    p.add_argument("--functions", help="comma-separated names (default: full suite)")
    p.add_argument("--dims", default="10,30")
    p.add_argument("--sizes", default="64,1000")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="summary table from a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_report)

    for action in sub.choices.values():
        action._negative_number_matcher = _NEGATIVE_VALUE
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _echo_config(args.subcommand, args)
    try:
        return args.func(args)
    except StateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
