"""Command-line interface: run scenarios, validate configs, analyze records.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import sys

from .pipeline import OutputExistsError, analyze_records, run_scenario
from .scenarios import (
    ConfigError,
    bundled_scenario_names,
    load_scenario,
    resolve_scenario_path,
    validate_config,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swaplight",
        description=(
            "Simulate two-cell swap squeezing experiments and analyze the "
            "resulting homodyne records."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its artifact set")
    run.add_argument(
        "scenario",
        help="bundled scenario name or path to a YAML config "
             f"(bundled: {', '.join(bundled_scenario_names())})",
    )
    run.add_argument("--out", default=None, help="output directory (default: out/<name>)")
    run.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    run.add_argument("--cycles", type=int, default=None, help="override n_cycles")
    run.add_argument("--force", action="store_true", help="overwrite an existing run")
    run.add_argument("--whitening", choices=("on", "off"), default=None,
                     help="override the whitening analysis option")

    val = sub.add_parser("validate", help="validate a scenario config file")
    val.add_argument("config", help="path to a YAML config or bundled name")

    ana = sub.add_parser("analyze", help="analyze a pre-existing records file")
    ana.add_argument("records", help="path to a records file (SPLT1)")
    ana.add_argument("--reference", default=None,
                     help="shot-noise reference records file; regenerated from "
                          "the sidecar config when omitted")
    ana.add_argument("--out", default=None, help="output directory")
    ana.add_argument("--force", action="store_true", help="overwrite an existing run")
    ana.add_argument("--whitening", choices=("on", "off"), default="on")
    return parser


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or f"out/{scenario.name}"
    whitening = None if args.whitening is None else args.whitening == "on"
    try:
        report = run_scenario(
            scenario, out, force=args.force, whitening=whitening,
            n_cycles=args.cycles, seed=args.seed,
        )
    except OutputExistsError as exc:
        print(f"refusing to overwrite: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / runtime problems
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{scenario.name}: wrote artifacts to {out}")
    for key in ("mode_spectrum", "duan", "mean_decay", "spectrum", "mode_shape"):
        if key in report:
            print(f"  {key}: {_summary_line(key, report[key])}")
    return EXIT_OK


def _summary_line(key: str, section: dict) -> str:
    if key == "mode_spectrum":
        lead = section["modes"][0]
        return (f"leading mode {lead['db']:.2f} dB, "
                f"{len(section['significant_squeezed_modes'])} significant")
    if key == "duan":
        return (f"value {section['value']:.3f} (threshold 2), "
                f"certified={section['certified']}")
    if key == "mean_decay":
        return (f"rates {section['fit_x']['rate_per_s']:.1f}/{section['fit_p']['rate_per_s']:.1f} "
                f"per s, amplitude ratio {section['amplitude_ratio_x_over_p']:.2f}")
    if key == "spectrum":
        return f"dip {section['dip_db']:.2f} dB at zero offset"
    if key == "mode_shape":
        return (f"central coefficient of variation "
                f"{section['central_coefficient_of_variation']:.4f}")
    return ""


def _cmd_validate(args) -> int:
    try:
        path = resolve_scenario_path(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    diags = validate_config(path)
    for diag in diags:
        print(diag)
    if any(d.severity == "error" for d in diags):
        return EXIT_CONFIG
    print(f"{path}: ok")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    out = args.out or "out/analyze"
    try:
        report = analyze_records(
            args.records,
            reference_path=args.reference,
            out_dir=out,
            force=args.force,
            whitening=args.whitening == "on",
        )
    except OutputExistsError as exc:
        print(f"refusing to overwrite: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    lead = report["mode_spectrum"]["modes"][0]
    print(f"analyzed {args.records}: leading mode {lead['db']:.2f} dB, "
          f"duan value {report['duan']['value']:.3f}; wrote {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "analyze":
        return _cmd_analyze(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
