"""Batch command line: ``kglab <experiment> [--config FILE] [options]``.

Exit codes: 0 when every asserted invariant of the experiment passes,
1 on an invariant failure, 2 on usage errors (unknown experiment, bad
config).  The default output directory is ``$KGLAB_OUT`` or ``./kglab-out``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, EXPERIMENTS, default_config, parse_config
from .experiments import list_experiments, run_experiment


def _print_registry(stream=sys.stdout) -> None:
    print("available experiments:", file=stream)
    for name in list_experiments():
        print(f"  {name}", file=stream)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kglab",
        description="deterministic numerical experiments for the mass-critical wave/Schrodinger laboratory",
    )
    parser.add_argument("experiment", nargs="?", help="experiment name, or 'list'")
    parser.add_argument("--config", type=Path, help="path to a run configuration file")
    parser.add_argument("--out", type=Path, help="output directory (default: $KGLAB_OUT or ./kglab-out)")
    parser.add_argument("--strict", action="store_true", help="reject unknown config keys and promote warnings")
    parser.add_argument("--seed", type=int, help="override the random seed")
    parser.add_argument("--jobs", type=int, default=1, help="worker budget for sweeps (reserved; runs are sequential)")
    args = parser.parse_args(argv)

    if args.experiment in (None, "list"):
        _print_registry()
        return 0 if args.experiment == "list" else 2

    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}", file=sys.stderr)
        _print_registry(sys.stderr)
        return 2

    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return 2

    try:
        if args.config is not None:
            config = parse_config(args.config.read_text(), strict=args.strict or None)
            if config.experiment != args.experiment:
                print(
                    f"config selects {config.experiment!r} but the command line says {args.experiment!r}",
                    file=sys.stderr,
                )
                return 2
        else:
            config = default_config(args.experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.strict:
        config.values[""]["strict"] = True
    if args.seed is not None:
        config.values[""]["seed"] = args.seed

    out_dir = args.out or Path(config.values[""].get("out_dir") or os.environ.get("KGLAB_OUT", "kglab-out"))
    out_dir = out_dir / args.experiment

    report = run_experiment(config, out_dir)
    for path in report.outputs:
        print(f"wrote {path}")
    print(f"manifest: {out_dir / 'manifest.txt'}")
    if report.passed:
        print(f"{args.experiment}: PASS")
        return 0
    print(f"{args.experiment}: FAIL")
    for failure in report.failures:
        print(f"  - {failure}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
