"""Command-line entry point.

Exit codes: 0 success, 1 failed gradient check, 2 configuration error,
3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .config import ExperimentConfig, load_config
from .core import ConfigError
from .data import IdxFormatError, make_synthetic, save_csv
from .harness import (
    TrainingDiverged,
    build_dataset,
    build_model,
    compare,
    matched_ablation,
    matched_baseline,
    run_experiment,
)
from .sampling import derive_stream
from .trainer import grad_check

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

log = logging.getLogger("adaptive_dropout")


def _seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _output_dir(config: ExperimentConfig, override, fallback: str) -> Path:
    if override is not None:
        return Path(override)
    return Path(config.output_dir or fallback)


def cmd_run(args) -> int:
    config = load_config(args.config)
    out = _output_dir(config, args.output_dir, "runs/" + config.method)
    result = run_experiment(config, output_dir=out)
    s = result.summary
    print(f"{config.method}: accuracy {s.final_accuracy_full:.4f}, effective epochs {s.effective_epochs:.4f}, "
          f"reheats {s.n_reheats}, rejections {s.n_rejections}")
    print(f"trace: {result.trace_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    configs = [load_config(p) for p in args.configs]
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    rows = compare(configs, seeds=args.seeds, output_dir=args.output_dir, jobs=args.jobs)
    print(f"{'method':<20} {'accuracy':>18} {'effective epochs':>20}  pareto")
    for r in rows:
        print(f"{r.method:<20} {r.accuracy:8.4f} ± {r.accuracy_std:6.4f} "
              f"{r.effective_epochs:10.4f} ± {r.effective_epochs_std:6.4f}  {'*' if r.dominant else ''}")
    print(f"table: {Path(args.output_dir) / 'pareto.csv'}")
    return EXIT_OK


def cmd_matched(args) -> int:
    config = load_config(args.config)
    out = _output_dir(config, args.output_dir, "runs/matched_" + config.method)
    if args.target_ee is None:
        rows = matched_ablation([config], output_dir=out)
        for r in rows:
            print(f"{r.variant}: EE {r.effective_epochs:.4f} accuracy {r.accuracy:.4f} | "
                  f"matched baseline EE {r.matched_effective_epochs:.4f} accuracy {r.baseline_accuracy:.4f}")
        print(f"table: {out / 'matched.csv'}")
        return EXIT_OK
    if args.target_ee <= 0:
        raise ConfigError("--target-ee must be positive")
    result = matched_baseline(config, args.target_ee, output_dir=out)
    s = result.summary
    print(f"matched baseline: target EE {args.target_ee}, achieved {s.effective_epochs:.6f}, "
          f"accuracy {s.final_accuracy_full:.4f}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    try:
        dataset = make_synthetic(args.kind, args.n, args.dim, args.classes, args.noise,
                                 derive_stream(args.seed, "data"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    save_csv(dataset, args.output)
    print(f"wrote {dataset.n} rows x {dataset.dim} features to {args.output}")
    return EXIT_OK


def cmd_grad_check(args) -> int:
    config = load_config(args.config)
    dataset = build_dataset(config).restrict(slice(0, args.samples))
    model = build_model(config, dataset)
    # zero output layer makes hidden gradients vanish; probe at a random point instead
    rng = derive_stream(config.master_seed, "init", 1)
    model = model.with_params(rng.uniform_array(len(model.params), -0.5, 0.5))
    error = grad_check(model, dataset, args.epsilon)
    ok = error < args.tolerance
    print(json.dumps({"max_relative_error": error, "tolerance": args.tolerance, "pass": ok}))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-dropout", description="Feedback-driven data dropout experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one config and write trace.csv + summary.json")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="accuracy vs effective-epoch table over several configs")
    p.add_argument("configs", nargs="+")
    p.add_argument("--seeds", type=_seeds, help="comma-separated seeds (default: 5 seeds from the first config's)")
    p.add_argument("--output-dir", default="runs/compare")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("matched-baseline", help="full-data run stopped at a given effective-epoch budget")
    p.add_argument("config")
    p.add_argument("--target-ee", type=float,
                   help="budget to match; omit to run the config first and match its EE")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_matched)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    p.add_argument("kind", choices=("blobs", "spirals"))
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("grad-check", help="finite-difference check of the configured model")
    p.add_argument("config")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, IdxFormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"diverged: {exc} (partial trace: {exc.trace_path})", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
