"""Synthetic scenarios, ground truths, and the Monte Carlo driver.

A scenario fixes the joint law of (x, s, a, y) plus optional violations:

* confounding: an unmeasured binary u_c raises both the emulation
  treatment log-odds and the outcome mean, so treatment exchangeability
  fails inside the emulation while the trial stays clean (randomization
  ignores u_c).
* transport: an unmeasured binary u_t raises both the participation
  log-odds and the outcome mean, so outcome means stop transporting
  between studies given the measured covariates.

The two u's are independent of each other and of x, each present in both
studies; only the pairing of effects creates the violation. Sampling is
study-conditional: the trial stream draws from the law given s = 1 and the
emulation stream from the law given s = 0, with fixed sizes, mirroring
separately sampled studies. Truths come from exact enumeration when the
covariates are binary and from a large importance-weighted Monte Carlo
otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from .data import Dataset
from .diagnostics import restriction_test
from .errors import ConfigError, FitError
from .estimators import (
    ESTIMATOR_NAMES,
    AnalysisPlan,
    run_plan_with,
)
from .inference import sandwich_se
from .nuisance import fit_nuisances, normalize_drop


@dataclass(frozen=True)
class CovariateLaw:
    """Covariate distribution: independent binaries or standard normals."""

    kind: str  # "binary" | "gaussian"
    p: tuple[float, ...] = (0.5,)  # binary only: Pr[x_j = 1]
    dim: int = 1  # gaussian only

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", tuple(self.p))
        if self.kind not in ("binary", "gaussian"):
            raise ConfigError(f"covariate kind must be binary or gaussian, got {self.kind!r}")
        if self.kind == "binary":
            if not self.p:
                raise ConfigError("binary covariate law needs at least one probability")
            if any(not (0.0 < q < 1.0) for q in self.p):
                raise ConfigError("binary covariate probabilities must be inside (0, 1)")
        else:
            if self.dim < 1:
                raise ConfigError("gaussian covariate law needs dim >= 1")

    @property
    def k(self) -> int:
        return len(self.p) if self.kind == "binary" else self.dim


@dataclass(frozen=True)
class ConfoundingViolation:
    """Unmeasured u_c -> emulation treatment and outcome."""

    u_prob: float = 0.5
    effect_on_treatment: float = 1.0
    effect_on_y: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.u_prob < 1.0):
            raise ConfigError("u_prob must be inside (0, 1)")

    @property
    def active(self) -> bool:
        return self.effect_on_treatment != 0.0 and self.effect_on_y != 0.0


@dataclass(frozen=True)
class TransportViolation:
    """Unmeasured u_t -> study participation and outcome."""

    u_prob: float = 0.5
    effect_on_participation: float = 1.0
    effect_on_y: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.u_prob < 1.0):
            raise ConfigError("u_prob must be inside (0, 1)")

    @property
    def active(self) -> bool:
        return self.effect_on_participation != 0.0 and self.effect_on_y != 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Full generative law for one scenario.

    ``participation`` and ``emulation_propensity`` are logit-scale
    coefficient vectors (intercept first, one slope per covariate). The
    outcome mean is intercept + x'beta_x + a * (effect + x'beta_ax) plus
    violation shifts; continuous outcomes add Gaussian noise, binary
    outcomes pass the mean expression through expit.
    """

    covariates: CovariateLaw
    participation: tuple[float, ...]
    trial_arm_prob: float
    emulation_propensity: tuple[float, ...]
    outcome_intercept: float
    outcome_x: tuple[float, ...]
    outcome_treatment: float
    outcome_tx: tuple[float, ...]
    noise_sd: float = 1.0
    outcome_kind: str = "continuous"
    confounding: ConfoundingViolation | None = None
    transport: TransportViolation | None = None

    def __post_init__(self) -> None:
        for name in ("participation", "emulation_propensity", "outcome_x", "outcome_tx"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = self.covariates.k
        if len(self.participation) != k + 1:
            raise ConfigError(f"participation needs {k + 1} coefficients (intercept first)")
        if len(self.emulation_propensity) != k + 1:
            raise ConfigError(
                f"emulation_propensity needs {k + 1} coefficients (intercept first)"
            )
        if len(self.outcome_x) != k or len(self.outcome_tx) != k:
            raise ConfigError(f"outcome_x and outcome_tx need {k} coefficients")
        if not (0.0 < self.trial_arm_prob < 1.0):
            raise ConfigError("trial_arm_prob must be inside (0, 1)")
        if self.noise_sd < 0.0:
            raise ConfigError("noise_sd must be non-negative")
        if self.outcome_kind not in ("continuous", "binary"):
            raise ConfigError("outcome_kind must be continuous or binary")

    @property
    def k(self) -> int:
        return self.covariates.k

    def covariate_names(self) -> tuple[str, ...]:
        return tuple(f"X{j + 1}" for j in range(self.k))

    def outcome_location(self, x: np.ndarray, a: np.ndarray | float,
                         uc: np.ndarray | float, ut: np.ndarray | float) -> np.ndarray:
        """Outcome mean (continuous) or logit of the mean (binary)."""
        x = np.atleast_2d(x)
        loc = (
            self.outcome_intercept
            + x @ np.asarray(self.outcome_x)
            + np.asarray(a) * (self.outcome_treatment + x @ np.asarray(self.outcome_tx))
        )
        if self.confounding is not None:
            loc = loc + self.confounding.effect_on_y * np.asarray(uc)
        if self.transport is not None:
            loc = loc + self.transport.effect_on_y * np.asarray(ut)
        return loc

    def outcome_mean_given(self, x, a, uc, ut) -> np.ndarray:
        loc = self.outcome_location(x, a, uc, ut)
        return expit(loc) if self.outcome_kind == "binary" else loc

    def participation_logit(self, x: np.ndarray, ut: np.ndarray | float) -> np.ndarray:
        coef = np.asarray(self.participation)
        lp = coef[0] + np.atleast_2d(x) @ coef[1:]
        if self.transport is not None:
            lp = lp + self.transport.effect_on_participation * np.asarray(ut)
        return lp

    def emulation_treatment_logit(self, x: np.ndarray, uc: np.ndarray | float) -> np.ndarray:
        coef = np.asarray(self.emulation_propensity)
        lp = coef[0] + np.atleast_2d(x) @ coef[1:]
        if self.confounding is not None:
            lp = lp + self.confounding.effect_on_treatment * np.asarray(uc)
        return lp

    def to_dict(self) -> dict:
        out: dict = {
            "covariates": {"kind": self.covariates.kind},
            "participation": list(self.participation),
            "trial_arm_prob": self.trial_arm_prob,
            "emulation_propensity": list(self.emulation_propensity),
            "outcome_intercept": self.outcome_intercept,
            "outcome_x": list(self.outcome_x),
            "outcome_treatment": self.outcome_treatment,
            "outcome_tx": list(self.outcome_tx),
            "noise_sd": self.noise_sd,
            "outcome_kind": self.outcome_kind,
        }
        if self.covariates.kind == "binary":
            out["covariates"]["p"] = list(self.covariates.p)
        else:
            out["covariates"]["dim"] = self.covariates.dim
        if self.confounding is not None:
            out["confounding"] = {
                "u_prob": self.confounding.u_prob,
                "effect_on_treatment": self.confounding.effect_on_treatment,
                "effect_on_y": self.confounding.effect_on_y,
            }
        if self.transport is not None:
            out["transport"] = {
                "u_prob": self.transport.u_prob,
                "effect_on_participation": self.transport.effect_on_participation,
                "effect_on_y": self.transport.effect_on_y,
            }
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ScenarioConfig":
        try:
            cov_raw = dict(raw["covariates"])
            kind = cov_raw.pop("kind")
            if kind == "binary":
                covariates = CovariateLaw(kind="binary", p=tuple(cov_raw.get("p", (0.5,))))
            else:
                covariates = CovariateLaw(kind=kind, dim=int(cov_raw.get("dim", 1)))
            confounding = None
            if raw.get("confounding") is not None:
                confounding = ConfoundingViolation(**raw["confounding"])
            transport = None
            if raw.get("transport") is not None:
                transport = TransportViolation(**raw["transport"])
            return cls(
                covariates=covariates,
                participation=tuple(raw["participation"]),
                trial_arm_prob=float(raw["trial_arm_prob"]),
                emulation_propensity=tuple(raw["emulation_propensity"]),
                outcome_intercept=float(raw["outcome_intercept"]),
                outcome_x=tuple(raw["outcome_x"]),
                outcome_treatment=float(raw["outcome_treatment"]),
                outcome_tx=tuple(raw["outcome_tx"]),
                noise_sd=float(raw.get("noise_sd", 1.0)),
                outcome_kind=str(raw.get("outcome_kind", "continuous")),
                confounding=confounding,
                transport=transport,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad scenario config: {exc}") from exc


@dataclass(frozen=True)
class Truths:
    """Scenario ground truths in the emulation population."""

    mean0: float
    mean1: float
    ate: float
    condition_exchangeability: bool  # no unmeasured confounding in the emulation
    condition_transport: bool  # outcome means transport across studies
    restriction_holds: bool
    method: str  # "enumeration" | "importance"
    mc_error: tuple[float, float, float] = (0.0, 0.0, 0.0)  # (mean0, mean1, ate)

    def mean(self, arm: int) -> float:
        return self.mean1 if arm == 1 else self.mean0

    def to_dict(self) -> dict:
        return {
            "mean0": self.mean0,
            "mean1": self.mean1,
            "ate": self.ate,
            "condition_exchangeability": self.condition_exchangeability,
            "condition_transport": self.condition_transport,
            "restriction_holds": self.restriction_holds,
            "method": self.method,
            "mc_error": list(self.mc_error),
        }


def _child(seq: np.random.SeedSequence, index: int) -> np.random.SeedSequence:
    # Index-keyed child stream: reproducible independent of execution order.
    return np.random.SeedSequence(entropy=seq.entropy, spawn_key=tuple(seq.spawn_key) + (index,))


def _as_seedseq(seed: int | np.random.SeedSequence) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(entropy=int(seed))


def _u_levels(violation) -> tuple[float, ...]:
    return (0.0, 1.0) if violation is not None else (0.0,)


def _u_prob(violation, level: float) -> float:
    if violation is None:
        return 1.0
    return violation.u_prob if level == 1.0 else 1.0 - violation.u_prob


def _binary_cells(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Joint support (x, u_c, u_t) with prior weights, binary covariates only."""
    xs = list(itertools.product((0.0, 1.0), repeat=cfg.k))
    rows = []
    for xv in xs:
        px = 1.0
        for q, val in zip(cfg.covariates.p, xv):
            px *= q if val == 1.0 else 1.0 - q
        for uc in _u_levels(cfg.confounding):
            for ut in _u_levels(cfg.transport):
                w = px * _u_prob(cfg.confounding, uc) * _u_prob(cfg.transport, ut)
                rows.append((*xv, uc, ut, w))
    arr = np.asarray(rows)
    x = arr[:, : cfg.k]
    uc = arr[:, cfg.k]
    ut = arr[:, cfg.k + 1]
    w = arr[:, cfg.k + 2]
    return x, uc, ut, w


def _draw_stream(
    cfg: ScenarioConfig, s: int, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (x, u_c, u_t) from the law conditional on study s."""
    if cfg.covariates.kind == "binary":
        x, uc, ut, prior = _binary_cells(cfg)
        p_s1 = expit(cfg.participation_logit(x, ut))
        w = prior * (p_s1 if s == 1 else 1.0 - p_s1)
        w = w / np.sum(w)
        idx = rng.choice(len(w), size=size, p=w)
        return x[idx], uc[idx], ut[idx]

    # Gaussian covariates: accept-reject against Pr[S = s | x, u_t].
    xs: list[np.ndarray] = []
    uts: list[np.ndarray] = []
    got = 0
    batch = max(4 * size, 1024)
    while got < size:
        x = rng.standard_normal((batch, cfg.covariates.dim))
        if cfg.transport is not None:
            ut = (rng.random(batch) < cfg.transport.u_prob).astype(float)
        else:
            ut = np.zeros(batch)
        p_s1 = expit(cfg.participation_logit(x, ut))
        accept = rng.random(batch) < (p_s1 if s == 1 else 1.0 - p_s1)
        xs.append(x[accept])
        uts.append(ut[accept])
        got += int(np.sum(accept))
    x = np.vstack(xs)[:size]
    ut = np.concatenate(uts)[:size]
    if cfg.confounding is not None:
        # u_c is independent of s given (x, u_t): draw after acceptance.
        uc = (rng.random(size) < cfg.confounding.u_prob).astype(float)
    else:
        uc = np.zeros(size)
    return x, uc, ut


def generate(
    cfg: ScenarioConfig,
    n: tuple[int, int],
    seed: int | np.random.SeedSequence,
) -> Dataset:
    """Draw a composite sample: n = (trial size, emulation size).

    Trial rows come first. Each study has its own RNG stream keyed off the
    seed, so the same seed always yields the bit-identical dataset.
    """
    n1, n0 = int(n[0]), int(n[1])
    if n1 < 1 or n0 < 1:
        raise ConfigError(f"both study sizes must be positive, got {n!r}")
    root = _as_seedseq(seed)

    parts_x: list[np.ndarray] = []
    parts_s: list[np.ndarray] = []
    parts_a: list[np.ndarray] = []
    parts_y: list[np.ndarray] = []
    for stream, (s, size) in enumerate(((1, n1), (0, n0))):
        rng = np.random.default_rng(_child(root, stream))
        x, uc, ut = _draw_stream(cfg, s, size, rng)
        if s == 1:
            a = (rng.random(size) < cfg.trial_arm_prob).astype(np.int64)
        else:
            p_a = expit(cfg.emulation_treatment_logit(x, uc))
            a = (rng.random(size) < p_a).astype(np.int64)
        loc = cfg.outcome_location(x, a.astype(float), uc, ut)
        if cfg.outcome_kind == "continuous":
            y = loc + cfg.noise_sd * rng.standard_normal(size)
        else:
            y = (rng.random(size) < expit(loc)).astype(float)
        parts_x.append(x)
        parts_s.append(np.full(size, s, dtype=np.int64))
        parts_a.append(a)
        parts_y.append(y)

    return Dataset(
        x=np.vstack(parts_x),
        s=np.concatenate(parts_s),
        a=np.concatenate(parts_a),
        y=np.concatenate(parts_y),
        covariate_names=cfg.covariate_names(),
    )


def _enumeration_truths(cfg: ScenarioConfig) -> Truths:
    x, uc, ut, prior = _binary_cells(cfg)
    p_s1 = expit(cfg.participation_logit(x, ut))
    w_s0 = prior * (1.0 - p_s1)
    w_s0 = w_s0 / np.sum(w_s0)
    mean1 = float(w_s0 @ cfg.outcome_mean_given(x, 1.0, uc, ut))
    mean0 = float(w_s0 @ cfg.outcome_mean_given(x, 0.0, uc, ut))

    # Restriction check: E[y | x, s, a] equal across studies for every (x, a).
    max_gap = 0.0
    xs = np.unique(x, axis=0)
    for xv in xs:
        cell = np.all(x == xv, axis=1)
        for a in (0.0, 1.0):
            means = {}
            for s in (0, 1):
                if s == 1:
                    w = prior[cell] * p_s1[cell]  # a independent of (u_c, u_t) in the trial
                else:
                    p_a1 = expit(cfg.emulation_treatment_logit(x[cell], uc[cell])).ravel()
                    pa = p_a1 if a == 1.0 else 1.0 - p_a1
                    w = prior[cell] * (1.0 - p_s1[cell]) * pa
                w = w / np.sum(w)
                means[s] = float(w @ cfg.outcome_mean_given(x[cell], a, uc[cell], ut[cell]))
            max_gap = max(max_gap, abs(means[1] - means[0]))

    return Truths(
        mean0=mean0,
        mean1=mean1,
        ate=mean1 - mean0,
        condition_exchangeability=cfg.confounding is None or not cfg.confounding.active,
        condition_transport=cfg.transport is None or not cfg.transport.active,
        restriction_holds=max_gap < 1e-12,
        method="enumeration",
    )


def _importance_truths(cfg: ScenarioConfig, draws: int, seed: int) -> Truths:
    rng = np.random.default_rng(_as_seedseq(seed))
    x = rng.standard_normal((draws, cfg.covariates.dim))
    uc = (
        (rng.random(draws) < cfg.confounding.u_prob).astype(float)
        if cfg.confounding is not None
        else np.zeros(draws)
    )
    ut = (
        (rng.random(draws) < cfg.transport.u_prob).astype(float)
        if cfg.transport is not None
        else np.zeros(draws)
    )
    w = 1.0 - expit(cfg.participation_logit(x, ut))
    total = float(np.sum(w))
    m1 = cfg.outcome_mean_given(x, 1.0, uc, ut)
    m0 = cfg.outcome_mean_given(x, 0.0, uc, ut)

    def weighted(values: np.ndarray) -> tuple[float, float]:
        mean = float(w @ values / total)
        err = float(np.sqrt(np.sum((w * (values - mean)) ** 2)) / total)
        return mean, err

    mean1, err1 = weighted(m1)
    mean0, err0 = weighted(m0)
    ate, err_ate = weighted(m1 - m0)
    return Truths(
        mean0=mean0,
        mean1=mean1,
        ate=ate,
        condition_exchangeability=cfg.confounding is None or not cfg.confounding.active,
        condition_transport=cfg.transport is None or not cfg.transport.active,
        restriction_holds=(cfg.confounding is None or not cfg.confounding.active)
        and (cfg.transport is None or not cfg.transport.active),
        method="importance",
        mc_error=(err0, err1, err_ate),
    )


def true_values(
    cfg: ScenarioConfig, draws: int = 10_000_000, seed: int = 2_000_003
) -> Truths:
    """Ground-truth potential-outcome means in the emulation population.

    Binary covariates are enumerated exactly; Gaussian covariates use
    ``draws`` importance-weighted samples and report the Monte Carlo error.
    """
    if cfg.covariates.kind == "binary":
        return _enumeration_truths(cfg)
    return _importance_truths(cfg, draws, seed)


@dataclass(frozen=True)
class SeriesStats:
    """Aggregates for one estimator-arm pair across replicates."""

    estimator: str
    arm: int
    truth: float
    mean_estimate: float
    bias: float
    empirical_sd: float
    mean_std_error: float
    coverage: float
    reps_used: int

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "arm": self.arm,
            "truth": self.truth,
            "mean_estimate": self.mean_estimate,
            "bias": self.bias,
            "empirical_sd": self.empirical_sd,
            "mean_std_error": self.mean_std_error,
            "coverage": self.coverage,
            "reps_used": self.reps_used,
        }


@dataclass(frozen=True)
class MCReport:
    """Everything run_monte_carlo measured, JSON-ready via to_dict."""

    scenario: dict
    truths: Truths
    reps: int
    n: tuple[int, int]
    seed: int
    level: float
    misspec: dict
    series: tuple[SeriesStats, ...]
    delta_rejection: dict[int, float]
    restriction_rejection: dict[int, float] | None
    failures: int

    def series_for(self, estimator: str, arm: int) -> SeriesStats:
        for s in self.series:
            if s.estimator == estimator and s.arm == arm:
                return s
        raise KeyError(f"no series for {estimator}({arm})")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "truths": self.truths.to_dict(),
            "reps": self.reps,
            "n": list(self.n),
            "seed": self.seed,
            "level": self.level,
            "misspec": self.misspec,
            "series": [s.to_dict() for s in self.series],
            "delta_rejection": {str(k): v for k, v in self.delta_rejection.items()},
            "restriction_rejection": (
                None
                if self.restriction_rejection is None
                else {str(k): v for k, v in self.restriction_rejection.items()}
            ),
            "failures": self.failures,
        }


def replicate_estimates(
    cfg: ScenarioConfig,
    n: tuple[int, int],
    seed: int,
    index: int,
    plan: AnalysisPlan,
    *,
    restriction: bool = False,
    restriction_threshold: float = 0.05,
) -> dict[str, float]:
    """One replicate: generate, fit, estimate. Keyed RNG stream per index.

    Returns labels from the plan mapped to values, each "<label>.se" mapped
    to its sandwich standard error, and optionally "restriction_p(arm)"
    entries. Raises FitError when any model cannot be fitted.
    """
    d = generate(cfg, n, _child(_as_seedseq(seed), index))
    nu = fit_nuisances(d, cfg.outcome_kind, ridge=plan.ridge, drop=plan.drop)
    estimates = run_plan_with(d, nu, plan)
    out: dict[str, float] = {}
    for label, est in estimates.items():
        out[label] = est.value
        out[f"{label}.se"] = sandwich_se(est)
    if restriction:
        for arm in plan.arms:
            result = restriction_test(
                d,
                arm,
                outcome_kind=cfg.outcome_kind,
                threshold=restriction_threshold,
                ridge=plan.ridge,
            )
            out[f"restriction_p({arm})"] = result.test.p_value
    return out


def run_monte_carlo(
    cfg: ScenarioConfig,
    reps: int,
    n: tuple[int, int],
    seed: int,
    *,
    misspec: Mapping[str, Sequence[str]] | Sequence[str] | None = None,
    estimators: Sequence[str] = ESTIMATOR_NAMES,
    arms: Sequence[int] = (0, 1),
    level: float = 0.95,
    restriction: bool = True,
    restriction_threshold: float = 0.05,
    ridge: float = 0.0,
    truth_draws: int = 10_000_000,
) -> MCReport:
    """Replicate the scenario and summarize estimator behavior against truth.

    Reports per estimator and arm: bias, empirical sd, mean sandwich
    standard error, and coverage of the level-``level`` sandwich interval;
    plus the rejection rate of the benchmarking delta (phi minus chi,
    tested against zero at ``level``) and optionally of the restriction
    test. Replicates whose fits fail are dropped and counted; more than
    reps/2 failures aborts.
    """
    if reps < 2:
        raise ConfigError("need at least 2 replicates")
    plan = AnalysisPlan(
        outcome_kind=cfg.outcome_kind,
        estimators=tuple(estimators),
        arms=tuple(arms),
        ridge=ridge,
        drop=dict(misspec) if isinstance(misspec, Mapping) else misspec,
    )
    truths = true_values(cfg, draws=truth_draws)
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    want_delta = "phi" in plan.estimators and "chi" in plan.estimators

    records: list[dict[str, float]] = []
    failures = 0
    for i in range(reps):
        try:
            records.append(
                replicate_estimates(
                    cfg,
                    n,
                    seed,
                    i,
                    plan,
                    restriction=restriction,
                    restriction_threshold=restriction_threshold,
                )
            )
        except FitError:
            failures += 1
            if failures > reps / 2:
                raise FitError(
                    f"simulation aborted: {failures} of {i + 1} replicates failed to fit"
                ) from None

    used = len(records)
    if used == 0:
        raise FitError("simulation aborted: every replicate failed to fit")
    series: list[SeriesStats] = []
    for name in plan.estimators:
        for arm in plan.arms:
            label = f"{name}({arm})"
            values = np.asarray([r[label] for r in records])
            ses = np.asarray([r[f"{label}.se"] for r in records])
            truth = truths.mean(arm)
            covered = np.abs(values - truth) <= z * ses
            series.append(
                SeriesStats(
                    estimator=name,
                    arm=arm,
                    truth=truth,
                    mean_estimate=float(np.mean(values)),
                    bias=float(np.mean(values) - truth),
                    empirical_sd=float(np.std(values, ddof=1)),
                    mean_std_error=float(np.mean(ses)),
                    coverage=float(np.mean(covered)),
                    reps_used=used,
                )
            )

    delta_rejection: dict[int, float] = {}
    if want_delta:
        for arm in plan.arms:
            label = f"delta({arm})"
            rejected = [
                abs(r[label] / r[f"{label}.se"]) > z for r in records if r[f"{label}.se"] > 0
            ]
            delta_rejection[arm] = float(np.mean(rejected)) if rejected else float("nan")

    restriction_rejection: dict[int, float] | None = None
    if restriction:
        restriction_rejection = {}
        for arm in plan.arms:
            ps = np.asarray([r[f"restriction_p({arm})"] for r in records])
            restriction_rejection[arm] = float(np.mean(ps < restriction_threshold))

    misspec_echo = {
        name: list(cols)
        for name, cols in normalize_drop(misspec, cfg.covariate_names()).items()
    }
    return MCReport(
        scenario=cfg.to_dict(),
        truths=truths,
        reps=reps,
        n=(int(n[0]), int(n[1])),
        seed=int(seed),
        level=level,
        misspec=misspec_echo,
        series=tuple(series),
        delta_rejection=delta_rejection,
        restriction_rejection=restriction_rejection,
        failures=failures,
    )
