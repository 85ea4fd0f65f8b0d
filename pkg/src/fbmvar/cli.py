"""Command-line entry point.

    fbmvar constants
    fbmvar simulate --n 1024 --hurst 0.25 --seed 7 --out path.csv
    fbmvar experiment thm11 --f square --n 512 --m 20000 --out report.json
    fbmvar run-all --seed 42 --out report.json

Exit status is 0 when every check passes, 1 when any check fails and 2 on
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import covariance as cv
from . import experiments as ex
from .errors import FbmVarError
from .paths import BIFRACTIONAL, FBM, Generator, simulate
from .rng import RngStream

log = logging.getLogger("fbmvar")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _f_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _int_list(text: str) -> list[int]:
    return [int(s) for s in _f_list(text)]


def _float_list(text: str) -> list[float]:
    return [float(s) for s in _f_list(text)]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=_u64, dest="master_seed", help="master seed (u64)")
    p.add_argument("--n", type=int, help="grid resolution")
    p.add_argument("--m", type=int, dest="M", help="number of replications")
    p.add_argument("--f", type=_f_list, dest="f_names", help="test function name(s), comma separated")
    p.add_argument("--hurst", type=float, help="Hurst index")
    p.add_argument("--out", dest="output_path", help="report JSON path (default: stdout)")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    p.add_argument("--csv", dest="csv_path", help="per-sample CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbmvar", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print the series constants with radius and tail bound")
    p.add_argument("--radius", type=int, default=cv.DEFAULT_RADIUS)
    p.add_argument("--out", dest="output_path")

    p = sub.add_parser("simulate", help="simulate one path and write it as CSV (t,value)")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--hurst", type=float, default=0.25)
    p.add_argument("--model", choices=["fbm", "bifractional"], default="fbm")
    p.add_argument("--generator", choices=[g.value for g in Generator], default="circulant")
    p.add_argument("--seed", type=_u64, default=42)
    p.add_argument("--index", type=int, default=0, help="stream index of the path")
    p.add_argument("--out", dest="output_path", help="CSV path (default: stdout)")

    p = sub.add_parser("experiment", help="run one experiment")
    p.add_argument("name", choices=ex.EXPERIMENTS)
    _add_common(p)
    p.add_argument("--checks", type=_f_list, help="subset of checks to run")
    p.add_argument("--n-ladder", type=_int_list, dest="n_ladder")
    p.add_argument("--hurst-grid", type=_float_list, dest="hurst_grid")
    p.add_argument("--model", choices=["fbm", "bifractional"])
    p.add_argument("--generator", choices=[g.value for g in Generator])

    p = sub.add_parser("run-all", help="run every preset experiment")
    p.add_argument("--seed", type=_u64, dest="master_seed", default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", dest="output_path")
    p.add_argument("--config", help="JSON file with threshold overrides ({\"thresholds\": {...}})")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise FbmVarError("config file must hold a JSON object")
    return data


def cmd_constants(args) -> int:
    c14 = cv.constant_C14(args.radius)
    kappa = cv.constant_kappa(max(args.radius, 1))
    _emit(ex.dumps({"C14": c14.as_dict(), "kappa": kappa.as_dict()}), args.output_path)
    return 0


def cmd_simulate(args) -> int:
    model = BIFRACTIONAL if args.model == "bifractional" else FBM(args.hurst)
    generator = Generator.CHOLESKY if model is BIFRACTIONAL else args.generator
    path = simulate(model, args.n, RngStream(args.seed, args.index), generator)
    if args.output_path:
        with open(args.output_path, "w", encoding="utf-8") as fh:
            path.to_csv(fh)
    else:
        path.to_csv(sys.stdout)
    return 0


def cmd_experiment(args) -> int:
    file_values = _load_config(args.config)
    file_values.pop("experiment", None)
    keys = ["master_seed", "n", "M", "f_names", "hurst", "output_path", "workers", "csv_path",
            "checks", "n_ladder", "hurst_grid", "model", "generator"]
    overrides = {k: getattr(args, k) for k in keys}
    cfg = ex.resolve_config(args.name, file_values, overrides)
    report = ex.run_experiment(cfg)
    data = report.as_dict()
    ex.validate_report(data)
    _emit(ex.dumps(data), cfg.output_path)
    if cfg.csv_path:
        report.write_csv(cfg.csv_path)
    return 0 if report.verdict else 1


def cmd_run_all(args) -> int:
    file_values = _load_config(args.config)
    extra = set(file_values) - {"thresholds"}
    if extra:
        raise FbmVarError(f"run-all config accepts only 'thresholds', got {sorted(extra)}")

    def progress(rep):
        status = "PASS" if rep.verdict else "FAIL"
        print(f"{status}  {rep.config.label:22s} {rep.wall_clock_seconds:8.1f} s", file=sys.stderr)

    combined, _ = ex.run_all(args.master_seed, args.workers, file_values, progress)
    ex.validate_report(combined)
    _emit(ex.dumps(combined), args.output_path)
    return 0 if combined["verdict"] else 1


_COMMANDS = {
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "run-all": cmd_run_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (FbmVarError, ValueError, OSError) as exc:
        print(f"fbmvar: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
