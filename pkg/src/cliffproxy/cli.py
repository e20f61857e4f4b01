"""Command-line entry point.

    cliffproxy run <scenario> [--config file.json] [--seed N] [--out DIR]
                              [--paper-scale]
    cliffproxy plot <summary.csv> --kind {hist,bars,scatter} [--out file.svg]
    cliffproxy validate <config.json>

Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
failures (partial results are flushed before the failure propagates).
"""

from __future__ import annotations

import argparse
import json
import sys

from .scenarios import (
    SCENARIOS,
    ConfigError,
    emit_figure,
    run_scenario,
    validate_config,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cliffproxy",
        description="Clifford proxy-circuit benchmarking scenarios",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a named scenario")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--config", help="JSON file overriding scenario defaults")
    run.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument(
        "--paper-scale",
        action="store_true",
        help="full-scale target and randomization counts (slow)",
    )

    plot = sub.add_parser("plot", help="render a summary CSV as SVG")
    plot.add_argument("summary", help="summary CSV produced by a scenario")
    plot.add_argument("--kind", required=True, choices=("hist", "bars", "scatter"))
    plot.add_argument("--out", help="output SVG path (default: stdout)")

    val = sub.add_parser("validate", help="check a config file without running")
    val.add_argument("config", help="JSON config file")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return data


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            overrides = _load_config_file(args.config) if args.config else {}
            config = validate_config(
                args.scenario, overrides, args.seed, args.out, args.paper_scale
            )
            manifest = run_scenario(config)
            print(f"scenario {config.scenario} done; wrote {len(manifest.files)} files to {config.out_dir}")
            for name in manifest.files:
                print(f"  {name}")
            return 0
        if args.command == "plot":
            svg = emit_figure(args.summary, args.kind)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(svg)
                print(f"wrote {args.out}")
            else:
                sys.stdout.write(svg)
            return 0
        if args.command == "validate":
            data = _load_config_file(args.config)
            scenario = data.get("scenario")
            if not isinstance(scenario, str):
                raise ConfigError("config must carry a 'scenario' string field")
            seed = data.get("seed", 0)
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise ConfigError("'seed' must be an integer")
            out_dir = data.get("out_dir", ".")
            if not isinstance(out_dir, str):
                raise ConfigError("'out_dir' must be a string")
            validate_config(scenario, data, seed, out_dir)
            print(f"config ok: scenario {scenario}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure; partial CSVs remain on disk
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
