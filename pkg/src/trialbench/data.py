"""Composite-sample container, CSV loading, and structural validation.

A dataset holds one row per subject from the pooled sample: trial rows
(s == 1) and emulation rows (s == 0) share the covariate layout, a binary
treatment, and a single outcome column. Everything downstream assumes the
composite sample was formed by drawing the two studies separately, so the
trial fraction n1 / n is a design quantity, not an estimate of anything.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, SchemaError


@dataclass(frozen=True)
class Row:
    """One subject: covariates, study indicator, treatment, outcome."""

    x: tuple[float, ...]
    s: int
    a: int
    y: float


@dataclass(frozen=True)
class ColumnSchema:
    """Maps dataset roles to CSV column names."""

    s: str
    a: str
    y: str
    x: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(self.x))
        names = [self.s, self.a, self.y, *self.x]
        if len(set(names)) != len(names):
            raise SchemaError(f"schema maps two roles to the same column: {names}")
        if not self.x:
            raise SchemaError("schema needs at least one covariate column")


@dataclass(frozen=True)
class Dataset:
    """Immutable composite sample.

    Arrays are row-aligned: ``x`` is (n, k) float, ``s`` and ``a`` are (n,)
    integer arrays with values in {0, 1}, ``y`` is (n,) float. Both studies
    must be represented. Instances are safe to share; the arrays are marked
    read-only at construction.
    """

    x: np.ndarray
    s: np.ndarray
    a: np.ndarray
    y: np.ndarray
    covariate_names: tuple[str, ...]

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        s = np.asarray(self.s, dtype=np.int64)
        a = np.asarray(self.a, dtype=np.int64)
        y = np.asarray(self.y, dtype=float)
        names = tuple(str(c) for c in self.covariate_names)
        n, k = x.shape
        if len(names) != k:
            raise DomainError(
                f"{k} covariate columns but {len(names)} covariate names"
            )
        if s.shape != (n,) or a.shape != (n,) or y.shape != (n,):
            raise DomainError("column lengths disagree")
        if n == 0:
            raise DomainError("dataset is empty")
        if not np.all(np.isfinite(x)):
            raise DomainError("covariates contain non-finite values")
        if not np.all(np.isfinite(y)):
            raise DomainError("outcome contains non-finite values")
        for label, col in (("study", s), ("treatment", a)):
            bad = np.flatnonzero((col != 0) & (col != 1))
            if bad.size:
                raise DomainError(
                    f"{label} indicator outside {{0,1}} in row {bad[0] + 1}"
                )
        if not np.any(s == 1):
            raise DomainError("no trial rows (s == 1)")
        if not np.any(s == 0):
            raise DomainError("no emulation rows (s == 0)")
        for arr in (x, s, a, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    @property
    def n_trial(self) -> int:
        return int(np.sum(self.s == 1))

    @property
    def n_emulation(self) -> int:
        return int(np.sum(self.s == 0))

    def row(self, i: int) -> Row:
        return Row(
            x=tuple(float(v) for v in self.x[i]),
            s=int(self.s[i]),
            a=int(self.a[i]),
            y=float(self.y[i]),
        )

    def rows(self) -> list[Row]:
        return [self.row(i) for i in range(self.n)]

    def subset(self, idx: np.ndarray) -> "Dataset":
        """New dataset from a row-index array (order preserved, repeats allowed)."""
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            x=self.x[idx],
            s=self.s[idx],
            a=self.a[idx],
            y=self.y[idx],
            covariate_names=self.covariate_names,
        )


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # "pass" | "warn" | "fail"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the structural checks; ``ok`` means no hard failure."""

    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def warnings(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if c.status == "warn")

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if c.status == "fail")

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "status": c.status, "message": c.message}
                for c in self.checks
            ],
        }


def _parse_cell(raw: str, column: str, row_number: int) -> float:
    text = raw.strip()
    if not text:
        raise ParseError(f"row {row_number}: empty value in column {column!r}")
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"row {row_number}: could not parse {raw!r} in column {column!r}"
        ) from None


def _parse_indicator(raw: str, column: str, row_number: int) -> int:
    value = _parse_cell(raw, column, row_number)
    if value not in (0.0, 1.0):
        raise DomainError(
            f"row {row_number}: column {column!r} must be 0 or 1, got {raw.strip()!r}"
        )
    return int(value)


def load_dataset(path: str, schema: ColumnSchema) -> Dataset:
    """Read a headered CSV into a Dataset, preserving file row order.

    Row numbers in error messages count data rows from 1 (the header is
    row 0). Cells must be decimal numerals; categorical covariates have to
    be encoded to numeric columns before loading.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        positions: dict[str, int] = {}
        for name in (schema.s, schema.a, schema.y, *schema.x):
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
            positions[name] = header.index(name)

        s_list: list[int] = []
        a_list: list[int] = []
        y_list: list[float] = []
        x_list: list[list[float]] = []
        for row_number, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise ParseError(
                    f"row {row_number}: expected {len(header)} fields, got {len(record)}"
                )
            s_list.append(_parse_indicator(record[positions[schema.s]], schema.s, row_number))
            a_list.append(_parse_indicator(record[positions[schema.a]], schema.a, row_number))
            y_list.append(_parse_cell(record[positions[schema.y]], schema.y, row_number))
            x_list.append(
                [_parse_cell(record[positions[c]], c, row_number) for c in schema.x]
            )

    if not s_list:
        raise SchemaError(f"{path}: no data rows")
    return Dataset(
        x=np.asarray(x_list, dtype=float),
        s=np.asarray(s_list, dtype=np.int64),
        a=np.asarray(a_list, dtype=np.int64),
        y=np.asarray(y_list, dtype=float),
        covariate_names=schema.x,
    )


def save_dataset(d: Dataset, path: str, schema: ColumnSchema | None = None) -> None:
    """Write a Dataset back to CSV. Values round-trip through load_dataset."""
    if schema is None:
        schema = ColumnSchema(s="S", a="A", y="Y", x=d.covariate_names)
    if len(schema.x) != d.k:
        raise SchemaError("schema covariate count does not match dataset")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema.s, schema.a, schema.y, *schema.x])
        for i in range(d.n):
            writer.writerow(
                [
                    int(d.s[i]),
                    int(d.a[i]),
                    repr(float(d.y[i])),
                    *[repr(float(v)) for v in d.x[i]],
                ]
            )


def validate(d: Dataset) -> ValidationReport:
    """Structural checks. Pure function of the dataset; does not raise."""
    checks: list[CheckResult] = []

    checks.append(
        CheckResult(
            "shape",
            "pass",
            f"{d.n} rows ({d.n_trial} trial, {d.n_emulation} emulation), "
            f"{d.k} covariates",
        )
    )
    checks.append(
        CheckResult("value_ranges", "pass", "study and treatment are binary, outcome finite")
    )

    empty = [
        (s, a)
        for s in (0, 1)
        for a in (0, 1)
        if not np.any((d.s == s) & (d.a == a))
    ]
    if empty:
        cells = ", ".join(f"(s={s}, a={a})" for s, a in empty)
        checks.append(
            CheckResult("study_by_treatment_cells", "fail", f"empty cells: {cells}")
        )
    else:
        checks.append(
            CheckResult(
                "study_by_treatment_cells", "pass", "all four study-by-treatment cells occupied"
            )
        )

    for s in (0, 1):
        mask = d.s == s
        for j, name in enumerate(d.covariate_names):
            col = d.x[mask, j]
            if col.size and np.all(col == col[0]):
                checks.append(
                    CheckResult(
                        "constant_covariate",
                        "warn",
                        f"covariate {name!r} is constant within study s={s}",
                    )
                )

    outcome_values = np.unique(d.y)
    if outcome_values.size == 1:
        checks.append(
            CheckResult("outcome_variation", "warn", "outcome is constant across all rows")
        )

    return ValidationReport(checks=tuple(checks))
