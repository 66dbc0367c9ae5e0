"""Canonical scenario presets.

``d1`` is the correct-specification benchmark scenario used across the
test suite and docs: one balanced binary covariate, moderate covariate
shift between studies (participation log-odds -0.4 + 0.8 x), a fair-coin
trial arm, emulation treatment log-odds -0.2 + 0.6 x, and outcome mean
1 + x + 2 a + a x with unit Gaussian noise. Under it the emulation mean
of the potential outcome under treatment is 3 + 2 * Pr[x = 1 | s = 0]
= 3.80262 and the effect is 2.40131.

The four ``truth_table`` presets cross the two identification conditions:
"exchangeability" for no unmeasured treatment-outcome confounding in the
emulation, "transport" for outcome means carrying across studies given
covariates. Violations switch on an unmeasured balanced binary with unit
effects; see simulation.ConfoundingViolation / TransportViolation.
"""

from __future__ import annotations

from .errors import ConfigError
from .simulation import (
    ConfoundingViolation,
    CovariateLaw,
    ScenarioConfig,
    TransportViolation,
)

TRUTH_TABLE_ROWS = ("TT", "FT", "TF", "FF")


def d1(
    confounding: ConfoundingViolation | None = None,
    transport: TransportViolation | None = None,
) -> ScenarioConfig:
    """The canonical benchmark scenario, optionally with violations."""
    return ScenarioConfig(
        covariates=CovariateLaw(kind="binary", p=(0.5,)),
        participation=(-0.4, 0.8),
        trial_arm_prob=0.5,
        emulation_propensity=(-0.2, 0.6),
        outcome_intercept=1.0,
        outcome_x=(1.0,),
        outcome_treatment=2.0,
        outcome_tx=(1.0,),
        noise_sd=1.0,
        outcome_kind="continuous",
        confounding=confounding,
        transport=transport,
    )


def normalize_row(row: str) -> str:
    """Accept 'FT', '(F,T)', 'f,t' and the like; first letter is exchangeability."""
    letters = [c for c in row.upper() if c in ("T", "F")]
    if len(letters) != 2:
        raise ConfigError(
            f"truth-table row must contain exactly two T/F letters, got {row!r}"
        )
    return "".join(letters)


def truth_table(row: str) -> ScenarioConfig:
    """Scenario for one row of the condition truth table.

    The row names the truth value of (exchangeability, transport):
    "TT" both hold, "FT" confounded emulation, "TF" broken transport,
    "FF" both violated.
    """
    key = normalize_row(row)
    confounding = ConfoundingViolation() if key[0] == "F" else None
    transport = TransportViolation() if key[1] == "F" else None
    return d1(confounding=confounding, transport=transport)


PRESETS = {
    "D1": d1,
    **{f"TRUTH_TABLE_{row}": (lambda r=row: truth_table(r)) for row in TRUTH_TABLE_ROWS},
}


def preset(name: str) -> ScenarioConfig:
    """Look up a preset scenario by case-insensitive name."""
    key = name.upper()
    if key not in PRESETS:
        raise ConfigError(
            f"unknown scenario preset {name!r}; available: {sorted(PRESETS)}"
        )
    return PRESETS[key]()
