"""Evaluation metrics for RUL predictions.

All metrics are driven by the per-instance error delta = predicted - actual.
The timeliness score penalizes late predictions (delta > 0) more steeply
than early ones via two decay constants; accuracy counts predictions inside
the closed window [-tau1, tau2]; false positives and negatives are the two
ways of leaving that window. The three outcomes partition every record set,
so A + FPR + FNR is 100 by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalRecord:
    """One test instance's prediction vs. truth.

    Attributes:
        predicted: Estimated RUL.
        actual: True RUL at truncation, >= 0.
        observed_len: Cycles observed before truncation, >= 1.
    """

    predicted: float
    actual: float
    observed_len: int

    @property
    def delta(self) -> float:
        return self.predicted - self.actual

    def validate(self) -> None:
        if self.actual < 0:
            raise ValueError(f"actual RUL must be >= 0, got {self.actual}")
        if self.observed_len < 1:
            raise ValueError(
                f"observed length must be >= 1, got {self.observed_len}"
            )


@dataclass(frozen=True)
class MetricsReport:
    """Full metric set for one evaluation run."""

    s: float
    a: float
    mae: float
    mse: float
    mape1: float
    mape2: float
    fpr: float
    fnr: float
    tau1: float
    tau2: float
    n: int

    def as_table(self) -> str:
        rows = [
            ("S", f"{self.s:.4f}"),
            ("A (%)", f"{self.a:.2f}"),
            ("MAE", f"{self.mae:.4f}"),
            ("MSE", f"{self.mse:.4f}"),
            ("MAPE1 (%)", f"{self.mape1:.4f}"),
            ("MAPE2 (%)", f"{self.mape2:.4f}"),
            ("FPR (%)", f"{self.fpr:.2f}"),
            ("FNR (%)", f"{self.fnr:.2f}"),
        ]
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value}" for name, value in rows]
        header = f"metrics over {self.n} instances (tau1={self.tau1:g}, tau2={self.tau2:g})"
        return "\n".join([header] + lines)

    def as_key_values(self) -> str:
        pairs = [
            ("s", self.s),
            ("a", self.a),
            ("mae", self.mae),
            ("mse", self.mse),
            ("mape1", self.mape1),
            ("mape2", self.mape2),
            ("fpr", self.fpr),
            ("fnr", self.fnr),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("n", self.n),
        ]
        return "\n".join(f"{k}={v!r}" for k, v in pairs)


def _check_taus(tau1: float, tau2: float) -> None:
    if tau1 <= 0 or tau2 <= 0:
        raise ValueError(f"tau1 and tau2 must be > 0, got {tau1}, {tau2}")


def _check_records(records: list[EvalRecord]) -> None:
    if not records:
        raise ValueError("no evaluation records")
    for r in records:
        r.validate()


def timeliness(records: list[EvalRecord], tau1: float, tau2: float) -> float:
    """Asymmetric exponential score: sum of exp(|delta|/tau)-1 per record.

    Early predictions (delta < 0) decay with tau1, late and exact ones with
    tau2; a delta of zero contributes nothing either way.
    """
    _check_taus(tau1, tau2)
    _check_records(records)
    total = 0.0
    for r in records:
        gamma = 1.0 / tau1 if r.delta < 0 else 1.0 / tau2
        total += float(np.exp(gamma * abs(r.delta))) - 1.0
    return total


def outcome_counts(
    records: list[EvalRecord], tau1: float, tau2: float
) -> tuple[int, int, int]:
    """Partition records into (accurate, false positive, false negative) counts.

    Accurate: delta in the closed interval [-tau1, tau2]. False positive:
    delta < -tau1 (too early). False negative: delta > tau2 (too late).
    The three counts always sum to the record count.
    """
    _check_taus(tau1, tau2)
    _check_records(records)
    acc = fp = fn = 0
    for r in records:
        if r.delta < -tau1:
            fp += 1
        elif r.delta > tau2:
            fn += 1
        else:
            acc += 1
    return acc, fp, fn


def accuracy(records: list[EvalRecord], tau1: float, tau2: float) -> float:
    """Percentage of predictions inside [-tau1, tau2]."""
    acc, _, _ = outcome_counts(records, tau1, tau2)
    return 100.0 * acc / len(records)


def fp_fn_rates(
    records: list[EvalRecord], tau1: float, tau2: float
) -> tuple[float, float]:
    """False positive and false negative percentages."""
    _, fp, fn = outcome_counts(records, tau1, tau2)
    n = len(records)
    return 100.0 * fp / n, 100.0 * fn / n


def error_stats(records: list[EvalRecord]) -> tuple[float, float, float, float]:
    """(MAE, MSE, MAPE1, MAPE2).

    MAPE1 divides each absolute error by the true RUL, MAPE2 by the true
    total remaining life (RUL plus observed length).

    Raises:
        ValueError: When a record's MAPE denominator is zero, naming it.
    """
    _check_records(records)
    n = len(records)
    mae = mse = mape1 = mape2 = 0.0
    for k, r in enumerate(records):
        d = abs(r.delta)
        mae += d
        mse += d * d
        if r.actual <= 0:
            raise ValueError(f"record {k}: actual RUL is 0, MAPE1 undefined")
        if r.actual + r.observed_len <= 0:
            raise ValueError(f"record {k}: zero total life, MAPE2 undefined")
        mape1 += d / r.actual
        mape2 += d / (r.actual + r.observed_len)
    return mae / n, mse / n, 100.0 * mape1 / n, 100.0 * mape2 / n


def full_report(
    records: list[EvalRecord], tau1: float = 13.0, tau2: float = 10.0
) -> MetricsReport:
    """All metrics in one report; defaults penalize lateness over earliness."""
    s = timeliness(records, tau1, tau2)
    a = accuracy(records, tau1, tau2)
    mae, mse, mape1, mape2 = error_stats(records)
    fpr, fnr = fp_fn_rates(records, tau1, tau2)
    return MetricsReport(
        s=s,
        a=a,
        mae=mae,
        mse=mse,
        mape1=mape1,
        mape2=mape2,
        fpr=fpr,
        fnr=fnr,
        tau1=tau1,
        tau2=tau2,
        n=len(records),
    )
