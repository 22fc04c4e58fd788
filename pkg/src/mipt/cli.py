"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical
diagnostic failure (unsaturated depth, degenerate collapse, failed self-test).
The worker count for sweeps comes from the ``MIPT_WORKERS`` environment
variable (default 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .circuits import SaturationError
from .collapse import CollapseError, DatasetError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("mipt")


def _load_config(ref: str) -> pipeline.ExperimentConfig:
    path = Path(ref)
    if not path.exists() and (Path(pipeline.__file__).parent / "recipes" / f"{ref}.json").exists():
        return pipeline.load_recipe(ref)
    return pipeline.ExperimentConfig.load(path)


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.trajectories is not None:
        config.trajectories = args.trajectories
        config.validate()
    stem = Path(args.config).stem
    out = Path(args.output) if args.output else Path(f"{stem}.result.json")
    log.info("running %d points, %d trajectories each", len(config.points()), config.trajectories)
    result = pipeline.run_sweep(config, progress=lambda pt: log.info("done L=%s p=%s eta=%s", *pt))
    pipeline.export_result(result, "json", out)
    table = out.with_name(out.name.replace(".result.json", "") + ".table.csv") if out.name.endswith(".result.json") else out.with_suffix(".table.csv")
    pipeline.write_summary_table(result, table)
    print(f"wrote {out} and {table}")
    return EXIT_OK


def cmd_collapse(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    fit, _ = pipeline.analyze_collapse(
        args.inputs, p_star=args.p_star, epsilon=args.epsilon, sizes=sizes, smooth=args.smooth, out_dir=args.out_dir
    )
    print(json.dumps(fit.to_dict(), indent=2))
    return EXIT_OK


def cmd_export(args) -> int:
    result = pipeline.load_result(args.result)
    out = Path(args.output) if args.output else Path(args.result).with_suffix("." + args.format)
    if out.resolve() == Path(args.result).resolve():
        out = out.with_name(out.stem + ".export." + args.format)
    pipeline.export_result(result, args.format, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_mubs(args) -> int:
    from .pauli import enumerate_mubs

    part = enumerate_mubs(args.n)
    text = part.to_text()
    if args.cache_dir:
        d = Path(args.cache_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"mubs_n{args.n}.tsv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_all

    failures = 0
    for name, ok, detail in run_all():
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += not ok
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mipt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON config or recipe name")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trajectories", type=int, help="override trajectories per point")
    p.add_argument("-o", "--output", help="result path (default <config>.result.json)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("collapse", help="fit critical exponents by data collapse")
    p.add_argument("inputs", nargs="+", help="dataset CSV (L,p,s_mean,s_err) or sweep result files")
    p.add_argument("--p-star", type=float, help="critical rate (default: variance peak of the largest size)")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--sizes", help="comma-separated sizes (default: four largest)")
    p.add_argument("--smooth", action="store_true", help="3-point moving average before interpolation")
    p.add_argument("--out-dir", help="write collapse_fit.json and collapse_rescaled.csv here")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("export", help="convert a sweep result to csv or json")
    p.add_argument("result")
    p.add_argument("--format", choices=("csv", "json"), required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("mubs", help="print the MUB partition of the n-qubit Pauli strings")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cache-dir", help="also write mubs_n<k>.tsv here")
    p.set_defaults(func=cmd_mubs)

    p = sub.add_parser("selftest", help="run the built-in oracle checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SaturationError, CollapseError, FloatingPointError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical diagnostic: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (pipeline.ConfigError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
