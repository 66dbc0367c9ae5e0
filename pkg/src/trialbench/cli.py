"""Command line entry point.

Three subcommands, each driven by a single JSON config file:

* ``analyze``: load a composite CSV, run the requested estimators with
  inference and diagnostics, write a JSON report plus a text summary.
* ``simulate``: run a Monte Carlo study of a scenario and write its report.
* ``validate``: run the structural dataset checks and report them.

Exit codes are stable: 0 success, 2 configuration problem, 3 data problem,
4 estimation or testing failure, 5 internal error. ``validate`` exits 3
when the dataset fails a hard check. On failure a one-line JSON object
describing the error goes to stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import traceback

from .config import AnalysisConfig, SimulationConfig, ValidateConfig, load_json
from .data import ColumnSchema, Dataset, load_dataset, validate
from .errors import (
    ConfigError,
    DataError,
    DegenerateTestError,
    FitError,
    IncompatibleEstimatesError,
    TrialbenchError,
)
from .report import (
    build_analysis_report,
    build_simulation_report,
    build_validation_report,
    render_analysis_summary,
    render_simulation_summary,
    render_validation_summary,
    run_simulation_config,
    write_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_FIT = 4
EXIT_INTERNAL = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialbench",
        description=(
            "Benchmark an observational trial emulation against its index "
            "randomized trial with doubly robust estimators."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = (
        ("analyze", "estimate, test, and diagnose on a composite dataset"),
        ("simulate", "Monte Carlo study of a synthetic scenario"),
        ("validate", "structural checks on a composite dataset"),
    )
    for name, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the JSON config file")
        p.add_argument("--output", help="override the config's output path")
        p.add_argument(
            "--quiet", action="store_true", help="suppress the text summary on stdout"
        )
    return parser


def _text_path(output: str) -> str:
    return output[: -len(".json")] + ".txt" if output.endswith(".json") else output + ".txt"


def _load(path: str, schema: ColumnSchema) -> Dataset:
    try:
        return load_dataset(path, schema)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc


def _write(report: dict, summary: str, output: str) -> None:
    try:
        write_report(report, output)
        with open(_text_path(output), "w", encoding="utf-8") as fh:
            fh.write(summary)
    except OSError as exc:
        raise ConfigError(f"cannot write output {output}: {exc}") from exc


def _run_analyze(raw: dict, output: str | None, quiet: bool) -> int:
    config = AnalysisConfig.from_dict(raw)
    if output is not None:
        config = dataclasses.replace(config, output=output)
    d = _load(config.input, config.schema)
    report = build_analysis_report(config, d)
    summary = render_analysis_summary(report)
    _write(report, summary, config.output)
    if not quiet:
        print(summary)
        print(f"report written to {config.output}")
    return EXIT_OK


def _run_simulate(raw: dict, output: str | None, quiet: bool) -> int:
    config = SimulationConfig.from_dict(raw)
    if output is not None:
        config = dataclasses.replace(config, output=output)
    result = run_simulation_config(config)
    report = build_simulation_report(config, result)
    summary = render_simulation_summary(report)
    _write(report, summary, config.output)
    if not quiet:
        print(summary)
        print(f"report written to {config.output}")
    return EXIT_OK


def _run_validate(raw: dict, output: str | None, quiet: bool) -> int:
    config = ValidateConfig.from_dict(raw)
    if output is not None:
        config = dataclasses.replace(config, output=output)
    d = _load(config.input, config.schema)
    result = validate(d)
    report = build_validation_report(config, result)
    summary = render_validation_summary(report)
    if config.output is not None:
        _write(report, summary, config.output)
    if not quiet:
        print(summary)
        if config.output is not None:
            print(f"report written to {config.output}")
    return EXIT_OK if result.ok else EXIT_DATA


_COMMANDS = {
    "analyze": _run_analyze,
    "simulate": _run_simulate,
    "validate": _run_validate,
}


def _fail(exc: BaseException, code: int) -> int:
    payload = {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        }
    }
    print(json.dumps(payload))
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_json(args.config)
        return _COMMANDS[args.command](raw, args.output, args.quiet)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except DataError as exc:
        return _fail(exc, EXIT_DATA)
    except (FitError, DegenerateTestError, IncompatibleEstimatesError) as exc:
        return _fail(exc, EXIT_FIT)
    except TrialbenchError as exc:
        return _fail(exc, EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 5
        traceback.print_exc(file=sys.stderr)
        return _fail(exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
