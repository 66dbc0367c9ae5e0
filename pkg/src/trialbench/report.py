"""Report assembly, JSON schema validation, and plain-text summaries.

The JSON layout is versioned (``schema_version``) and pinned by the
report_schema.json shipped inside the package; every report written by the
command line is validated against that schema before it reaches disk.
Timestamps are the only content that changes between identical runs.
"""

from __future__ import annotations

import importlib.metadata
import importlib.resources
import json
import math
from datetime import datetime, timezone

import jsonschema
import numpy as np

from .config import AnalysisConfig, SimulationConfig, ValidateConfig
from .data import Dataset, ValidationReport, validate
from .diagnostics import overlap_summary, restriction_test
from .errors import ValidationFailure
from .estimators import AnalysisPlan, EstimateWithIF, run_plan_with
from .inference import BootstrapResult, bootstrap, sandwich_ci, wald_test
from .nuisance import fit_nuisances
from .simulation import MCReport, run_monte_carlo

SCHEMA_VERSION = 1

_AGREE_TEXT = (
    "The emulation estimate and the trial-transported estimate are statistically "
    "compatible. Treating that agreement as support for both identification "
    "conditions is reasonable but not guaranteed: violations can offset each "
    "other, and averaging over covariates can hide conditional differences."
)
_DISAGREE_TEXT = (
    "The emulation estimate and the trial-transported estimate differ by more "
    "than sampling variability explains. At least one identification condition "
    "fails, and the data alone cannot say which: the emulation may be "
    "confounded by something unmeasured, the two study populations may not be "
    "exchangeable enough for outcome means to transport, or both. Deciding "
    "among those explanations takes subject-matter knowledge, not more testing "
    "of this dataset."
)
_NOT_ASSESSED_TEXT = (
    "Benchmarking was not assessed: it needs both the emulation-only and the "
    "trial-transported estimators on at least one common treatment arm."
)


def tool_version() -> str:
    try:
        return importlib.metadata.version("trialbench")
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def load_report_schema() -> dict:
    text = (
        importlib.resources.files("trialbench")
        .joinpath("report_schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def validate_report(report: dict) -> None:
    """Check a report against the shipped schema; raises on mismatch."""
    jsonschema.validate(report, load_report_schema())


def jsonsafe(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonsafe(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.ndarray):
        return [jsonsafe(v) for v in obj.tolist()]
    return obj


def _metadata(config_echo: dict) -> dict:
    return {
        "tool": "trialbench",
        "version": tool_version(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config_echo,
    }


def _bootstrap_entry(
    br: BootstrapResult | None, point: float, level: float
) -> dict | None:
    if br is None:
        return None
    interval = br.percentile_interval(point, level)
    return {
        "std_error": interval.std_error,
        "lower": interval.lower,
        "upper": interval.upper,
        "level": level,
        "requested": br.requested,
        "used": int(br.replicates.size),
        "failures": br.failures,
        "seed": br.seed,
        "method": "bootstrap-percentile",
    }


def _estimate_entry(
    est: EstimateWithIF,
    level: float,
    boot: dict[str, BootstrapResult] | None,
    warnings: list[str],
    with_test: bool = False,
) -> dict:
    interval = sandwich_ci(est, level)
    br = boot.get(est.label) if boot else None
    entry: dict = {
        "value": est.value,
        "n_effective": est.n_effective,
        "sandwich": interval.to_dict(),
        "bootstrap": _bootstrap_entry(br, est.value, level),
    }
    if br is not None and interval.std_error > 0:
        ratio = abs(br.std_error - interval.std_error) / interval.std_error
        if ratio > 0.25:
            warnings.append(
                f"{est.label}: bootstrap and sandwich standard errors disagree by "
                f"{100 * ratio:.0f}% ({br.std_error:.4g} vs {interval.std_error:.4g})"
            )
    if with_test:
        entry["test"] = wald_test(est, 0.0).to_dict()
    return entry


def build_analysis_report(config: AnalysisConfig, d: Dataset) -> dict:
    """Run the full analysis and assemble the JSON-ready report dict.

    Raises ValidationFailure when the dataset fails a hard check; fit and
    positivity errors propagate from the layers that raise them.
    """
    report_validation = validate(d)
    if not report_validation.ok:
        messages = "; ".join(c.message for c in report_validation.failures)
        raise ValidationFailure(f"dataset failed validation: {messages}")

    warnings: list[str] = [f"validation: {c.message}" for c in report_validation.warnings]

    plan = AnalysisPlan(
        outcome_kind=config.outcome_kind,
        estimators=config.estimators,
        arms=config.arms,
        ridge=config.ridge,
        hajek=config.hajek,
    )
    nu = fit_nuisances(d, config.outcome_kind, ridge=config.ridge)
    estimates = run_plan_with(d, nu, plan)

    boot: dict[str, BootstrapResult] | None = None
    if config.bootstrap > 0:
        boot = bootstrap(d, plan, config.bootstrap, config.seed)
        failures = next(iter(boot.values())).failures
        if failures:
            warnings.append(
                f"bootstrap: {failures} of {config.bootstrap} replicates failed to fit "
                "and were dropped"
            )

    nuisance_block = nu.summaries()
    for name, entry in nuisance_block.items():
        if entry.get("converged") is False:
            warnings.append(f"nuisance: {name} did not converge")

    estimates_block: dict = {}
    for name in config.estimators:
        estimates_block[name] = {
            str(arm): _estimate_entry(estimates[f"{name}({arm})"], config.level, boot, warnings)
            for arm in config.arms
        }

    both_arms = 0 in config.arms and 1 in config.arms
    ate_block = None
    ate_reason = None
    if both_arms:
        ate_block = {
            name: _estimate_entry(estimates[f"ate_{name}"], config.level, boot, warnings)
            for name in config.estimators
        }
    else:
        ate_reason = "treatment effects need both arms; config requested only " + str(
            list(config.arms)
        )

    has_delta = "phi" in config.estimators and "chi" in config.estimators
    benchmarking_block = None
    benchmarking_reason = None
    delta_tests: dict[int, dict] = {}
    if has_delta:
        benchmarking_block = {}
        for arm in config.arms:
            entry = _estimate_entry(
                estimates[f"delta({arm})"], config.level, boot, warnings, with_test=True
            )
            benchmarking_block[str(arm)] = entry
            delta_tests[arm] = entry["test"]
    else:
        missing = [e for e in ("phi", "chi") if e not in config.estimators]
        benchmarking_reason = (
            "benchmarking contrasts the emulation-only and trial-transported "
            f"estimators; config omitted {missing}"
        )

    restriction_block = None
    if config.restriction:
        restriction_block = [
            restriction_test(
                d,
                arm,
                config.include_interactions,
                outcome_kind=config.outcome_kind,
                threshold=config.restriction_threshold,
                ridge=config.ridge,
            ).to_dict()
            for arm in config.arms
        ]

    overlap_block = None
    if config.overlap:
        overlap_block = overlap_summary(d, nu, config.weight_threshold).to_dict()

    alpha = 1.0 - config.level
    if not has_delta:
        verdict = "not-assessed"
        narrative = _NOT_ASSESSED_TEXT
    else:
        rejected = any(
            t["p_value"] is not None
            and not (isinstance(t["p_value"], float) and math.isnan(t["p_value"]))
            and t["p_value"] < alpha
            for t in delta_tests.values()
        )
        verdict = "incompatible" if rejected else "compatible"
        narrative = _DISAGREE_TEXT if rejected else _AGREE_TEXT

    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "metadata": _metadata(config.to_dict()),
        "validation": report_validation.to_dict(),
        "estimates": estimates_block,
        "contrasts": {
            "ate": ate_block,
            "ate_omitted_reason": ate_reason,
            "benchmarking": benchmarking_block,
            "benchmarking_omitted_reason": benchmarking_reason,
        },
        "diagnostics": {"restriction": restriction_block, "overlap": overlap_block},
        "nuisance": nuisance_block,
        "interpretation": {"benchmarking_verdict": verdict, "narrative": narrative},
        "warnings": warnings,
    }
    return jsonsafe(report)


def build_simulation_report(config: SimulationConfig, result: MCReport) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "metadata": _metadata(config.to_dict()),
        "result": result.to_dict(),
    }
    return jsonsafe(report)


def build_validation_report(config: ValidateConfig, result: ValidationReport) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "validation",
        "metadata": _metadata(config.to_dict()),
        "validation": result.to_dict(),
    }
    return jsonsafe(report)


def run_simulation_config(config: SimulationConfig) -> MCReport:
    return run_monte_carlo(
        config.scenario,
        config.reps,
        config.n,
        config.seed,
        misspec=config.misspec,
        estimators=config.estimators,
        arms=config.arms,
        level=config.level,
        restriction=config.restriction,
        restriction_threshold=config.restriction_threshold,
        ridge=config.ridge,
        truth_draws=config.truth_draws,
    )


def write_report(report: dict, path: str) -> None:
    """Schema-check then write; a schema mismatch is a bug, not user error."""
    validate_report(report)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{digits}f}"


def render_analysis_summary(report: dict) -> str:
    """Human-readable companion to the JSON report."""
    meta = report["metadata"]
    cfg = meta["config"]
    lines: list[str] = []
    lines.append(f"trialbench {meta['version']} analysis of {cfg['input']}")
    lines.append(f"generated {meta['created_utc']}")
    lines.append("")

    shape = next(
        (c["message"] for c in report["validation"]["checks"] if c["name"] == "shape"),
        "",
    )
    lines.append(f"data: {shape}")
    lines.append("")

    level_pct = f"{100 * cfg['level']:g}%"
    lines.append(f"potential-outcome means in the emulation population ({level_pct} CI)")
    for name, arms in report["estimates"].items():
        for arm, entry in sorted(arms.items()):
            sw = entry["sandwich"]
            line = (
                f"  {name}({arm}) = {_fmt(entry['value'])}"
                f"  se {_fmt(sw['std_error'])}"
                f"  [{_fmt(sw['lower'])}, {_fmt(sw['upper'])}]"
            )
            if entry.get("bootstrap"):
                bs = entry["bootstrap"]
                line += f"  bootstrap se {_fmt(bs['std_error'])}"
            lines.append(line)
    lines.append("")

    contrasts = report["contrasts"]
    if contrasts["ate"] is not None:
        lines.append("treatment effects (arm 1 minus arm 0)")
        for name, entry in contrasts["ate"].items():
            sw = entry["sandwich"]
            lines.append(
                f"  {name}: {_fmt(entry['value'])}"
                f"  se {_fmt(sw['std_error'])}"
                f"  [{_fmt(sw['lower'])}, {_fmt(sw['upper'])}]"
            )
        lines.append("")
    else:
        lines.append(f"treatment effects omitted: {contrasts['ate_omitted_reason']}")
        lines.append("")

    if contrasts["benchmarking"] is not None:
        lines.append("benchmarking delta (emulation-only minus trial-transported)")
        for arm, entry in sorted(contrasts["benchmarking"].items()):
            test = entry["test"]
            lines.append(
                f"  arm {arm}: delta = {_fmt(entry['value'])}"
                f"  se {_fmt(entry['sandwich']['std_error'])}"
                f"  z = {_fmt(test['statistic'], 3)}"
                f"  p = {_fmt(test['p_value'], 4)}"
            )
        lines.append("")
    else:
        lines.append(f"benchmarking omitted: {contrasts['benchmarking_omitted_reason']}")
        lines.append("")

    diag = report["diagnostics"]
    if diag["restriction"] is not None:
        lines.append("observed-data restriction (study adds no mean shift given covariates)")
        for entry in diag["restriction"]:
            test = entry["test"]
            lines.append(
                f"  arm {entry['arm']}: chi2({test['df']}) = {_fmt(test['statistic'], 3)}"
                f"  p = {_fmt(test['p_value'], 4)}  -> {entry['status']}"
            )
        lines.append("")
    if diag["overlap"] is not None:
        ov = diag["overlap"]
        flagged = {
            k: v["count_above"] for k, v in ov["weights"].items() if v["count_above"] > 0
        }
        lines.append(
            f"overlap: max weight {_fmt(ov['max_weight'], 2)}"
            + (
                f"; rows above threshold {ov['weight_threshold']:g}: {flagged}"
                if flagged
                else f"; no weights above threshold {ov['weight_threshold']:g}"
            )
        )
        lines.append("")

    lines.append("interpretation")
    lines.append(f"  {report['interpretation']['narrative']}")
    lines.append("")

    if report["warnings"]:
        lines.append("warnings")
        for w in report["warnings"]:
            lines.append(f"  - {w}")
        lines.append("")

    return "\n".join(lines)


def render_validation_summary(report: dict) -> str:
    validation = report["validation"]
    lines = [
        f"trialbench {report['metadata']['version']} validation of "
        f"{report['metadata']['config']['input']}"
    ]
    for check in validation["checks"]:
        lines.append(f"  [{check['status']}] {check['name']}: {check['message']}")
    lines.append("")
    lines.append("dataset is usable" if validation["ok"] else "dataset failed validation")
    lines.append("")
    return "\n".join(lines)


def render_simulation_summary(report: dict) -> str:
    result = report["result"]
    truths = result["truths"]
    lines: list[str] = []
    lines.append(
        f"trialbench {report['metadata']['version']} simulation: "
        f"{result['reps']} replicates, n = {result['n']}, seed {result['seed']}"
    )
    lines.append(f"generated {report['metadata']['created_utc']}")
    lines.append(
        f"truths ({truths['method']}): mean1 = {_fmt(truths['mean1'])}, "
        f"mean0 = {_fmt(truths['mean0'])}, effect = {_fmt(truths['ate'])}"
    )
    lines.append(
        "conditions: exchangeability "
        + ("holds" if truths["condition_exchangeability"] else "violated")
        + ", transport "
        + ("holds" if truths["condition_transport"] else "violated")
        + ", restriction "
        + ("holds" if truths["restriction_holds"] else "fails")
    )
    if result["misspec"]:
        lines.append(f"misspecified models: {result['misspec']}")
    lines.append("")
    lines.append("  estimator  arm      bias        sd   mean se  coverage")
    for s in result["series"]:
        lines.append(
            f"  {s['estimator']:>9}  {s['arm']:>3}"
            f"  {s['bias']:>9.5f}  {s['empirical_sd']:>8.5f}"
            f"  {s['mean_std_error']:>8.5f}  {s['coverage']:>8.3f}"
        )
    lines.append("")
    for arm, rate in sorted(result["delta_rejection"].items()):
        lines.append(f"benchmarking delta rejection rate, arm {arm}: {_fmt(rate, 3)}")
    if result["restriction_rejection"] is not None:
        for arm, rate in sorted(result["restriction_rejection"].items()):
            lines.append(f"restriction rejection rate, arm {arm}: {_fmt(rate, 3)}")
    if result["failures"]:
        lines.append(f"replicates dropped for fit failures: {result['failures']}")
    lines.append("")
    return "\n".join(lines)
