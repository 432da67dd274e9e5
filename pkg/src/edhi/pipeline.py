"""End-to-end orchestration: build, evaluate, predict, sweep.

Building a pipeline runs the full recipe: split instances, fit pooled
normalization and PCA on the fitting split, train the encoder-decoder on
healthy windows, construct target HI curves, fit the linear HI map, and
store the fitting split's final curves as the matching library. Validation
instances steer early stopping and sweep scoring, so their curves stay out
of the library. Every stage failure is re-raised with the stage's name.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig, SweepGrid, apply_overrides
from .data import RunToFailureDataset, truncate_at_fracs
from .health import (
    HiCurve,
    endpoint_targets,
    exponential_target_hi,
    fit_hi_model,
    frac_count,
    hi_curve,
    linear_target_hi,
    pointwise_reconstruction,
    reconstruction_error,
    sliding_windows,
    target_hi_from_error,
)
from .lstm import TrainConfig, TrainResult, train
from .matching import RulEstimate, candidate_estimates, estimate_rul
from .metrics import EvalRecord, MetricsReport, full_report, timeliness
from .numerics import apply_norm, fit_norm_stats, ols_fit, pca_fit, pca_transform
from .persist import PipelineBundle

# the five validation truncation locations used for sweep scoring
SWEEP_TRUNCATION_FRACS = tuple(np.linspace(0.20, 0.96, 5))


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class BuildInfo:
    """What happened during a build, beyond the bundle itself."""

    train_result: TrainResult
    fit_ids: list[str]
    val_ids: list[str]


@dataclass(frozen=True)
class InstanceEstimate:
    """One test instance's outcome in evaluation output order."""

    test_id: str
    estimate: RulEstimate
    actual: float | None
    observed_len: int


def split_instances(
    ds: RunToFailureDataset, validation_frac: float, seed: int
) -> tuple[list[int], list[int]]:
    """Seeded instance split; returns (fit indices, validation indices).

    Both lists keep the dataset's original order. The validation share is
    rounded to the nearest instance count.
    """
    n = len(ds.instances)
    n_val = int(round(validation_frac * n))
    if n_val >= n:
        raise ValueError(
            f"validation_frac {validation_frac} leaves no fitting instances"
        )
    order = np.random.default_rng(seed).permutation(n)
    val = sorted(int(i) for i in order[:n_val])
    fit = sorted(int(i) for i in order[n_val:])
    return fit, val


def _healthy_windows(
    derived: np.ndarray, l: int, healthy_frac: float | None
) -> list[np.ndarray]:
    """Training windows from one instance's healthy lead-in.

    None means the single first window; a fraction means every window inside
    the leading healthy prefix. Instances too short to yield a window
    contribute nothing.
    """
    length = derived.shape[0]
    if length < l:
        return []
    if healthy_frac is None:
        return [derived[:l]]
    prefix = derived[: frac_count(healthy_frac, length)]
    if prefix.shape[0] < l:
        return []
    return [w for _, w in sliding_windows(prefix, l)]


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        raise StageError(stage, str(exc)) from exc


def build_pipeline(
    ds: RunToFailureDataset, config: RunConfig
) -> tuple[PipelineBundle, BuildInfo]:
    """Train the full pipeline on a run-to-failure dataset.

    Args:
        ds: Full-life training instances.
        config: Validated run configuration; validation_frac must be > 0.

    Returns:
        (bundle, info): the persistable pipeline and the build details.

    Raises:
        StageError: Naming the failing stage: split, normalize, pca,
            train-lstm, target-hi, fit-lr, or hi-curves.
    """
    config.validate()
    ds.validate()
    if config.validation_frac <= 0:
        raise StageError("split", "validation split required for early stopping")
    fit_idx, val_idx = _stage(
        "split", split_instances, ds, config.validation_frac, config.seed
    )
    if not val_idx:
        raise StageError("split", "validation split required for early stopping")
    fit_instances = [ds.instances[i] for i in fit_idx]
    val_instances = [ds.instances[i] for i in val_idx]

    norm = _stage(
        "normalize", fit_norm_stats, [series for _, series in fit_instances]
    )
    normalized_fit = [
        _stage("normalize", apply_norm, series, norm) for _, series in fit_instances
    ]
    normalized_val = [
        _stage("normalize", apply_norm, series, norm) for _, series in val_instances
    ]

    pooled = np.concatenate(normalized_fit, axis=0)
    pca = _stage("pca", pca_fit, pooled, config.p)
    derived_fit = [pca_transform(z, pca) for z in normalized_fit]
    derived_val = [pca_transform(z, pca) for z in normalized_val]

    train_windows = []
    for z in derived_fit:
        train_windows.extend(_healthy_windows(z, config.l, config.healthy_frac))
    val_windows = []
    for z in derived_val:
        val_windows.extend(_healthy_windows(z, config.l, config.healthy_frac))
    if not train_windows:
        raise StageError(
            "train-lstm",
            f"no instance yields a healthy window of length {config.l}",
        )
    if not val_windows:
        raise StageError(
            "train-lstm",
            f"no validation instance yields a healthy window of length {config.l}",
        )
    train_cfg = TrainConfig(
        learning_rate=config.learning_rate,
        max_epochs=config.max_epochs,
        batch_size=config.batch_size,
        grad_clip_norm=config.grad_clip_norm,
        patience=config.patience,
        seed=config.seed,
    )
    result = _stage(
        "train-lstm", train, train_windows, train_cfg, val_windows, config.c
    )
    model = result.model

    if config.hi_variant == "endpoints":
        healthy = config.healthy_frac if config.healthy_frac is not None else 0.05
        rows = []
        targets = []
        for z in derived_fit:
            idx, values = _stage(
                "target-hi", endpoint_targets, z.shape[0], healthy, config.faulty_frac
            )
            rows.append(z[idx])
            targets.append(values)
        lr = _stage(
            "fit-lr", ols_fit, np.concatenate(rows, axis=0), np.concatenate(targets)
        )
    else:
        target_curves = []
        for z in derived_fit:
            if config.hi_variant in ("recon_error", "recon_error_squared"):
                recon = _stage("target-hi", pointwise_reconstruction, model, z)
                errors = reconstruction_error(z, recon)
                curve = target_hi_from_error(
                    errors, squared=config.hi_variant == "recon_error_squared"
                )
            elif config.hi_variant == "exponential":
                curve = _stage(
                    "target-hi", exponential_target_hi, z.shape[0], config.beta
                )
            else:
                curve = _stage("target-hi", linear_target_hi, z.shape[0])
            target_curves.append(curve)
        lr = _stage("fit-lr", fit_hi_model, derived_fit, target_curves)

    library = []
    for (uid, _), z in zip(fit_instances, derived_fit):
        curve = _stage(
            "hi-curves", hi_curve, lr, z, config.smooth_window, config.init_frac
        )
        library.append((uid, curve))

    bundle = PipelineBundle(
        norm=norm,
        pca=pca,
        lstm=model,
        lr=lr,
        hi_train_curves=library,
        config=config,
    )
    info = BuildInfo(
        train_result=result,
        fit_ids=[uid for uid, _ in fit_instances],
        val_ids=[uid for uid, _ in val_instances],
    )
    return bundle, info


def series_hi_curve(bundle: PipelineBundle, series: np.ndarray) -> HiCurve:
    """HI curve for one possibly-truncated instance under a built pipeline."""
    normalized = apply_norm(series, bundle.norm)
    derived = pca_transform(normalized, bundle.pca)
    cfg = bundle.config
    return hi_curve(bundle.lr, derived, cfg.smooth_window, cfg.init_frac)


def predict_one(bundle: PipelineBundle, series: np.ndarray) -> tuple[RulEstimate, HiCurve]:
    """RUL estimate plus the HI curve it was matched with."""
    if np.asarray(series).shape[0] == 0:
        raise ValueError("empty series")
    curve = series_hi_curve(bundle, series)
    cands = candidate_estimates(curve, bundle.hi_train_curves, bundle.match_config())
    train_lengths = [c.length for _, c in bundle.hi_train_curves]
    est = estimate_rul(cands, bundle.match_config(), curve.length, train_lengths)
    return est, curve


def evaluate_pipeline(
    bundle: PipelineBundle, test_ds: RunToFailureDataset
) -> tuple[MetricsReport, list[InstanceEstimate]]:
    """Score a labeled truncated test set.

    Raises:
        ValueError: If the test set has no RUL labels or its sensor count
            does not match the pipeline.
    """
    test_ds.validate()
    if test_ds.rul_labels is None:
        raise ValueError("test dataset has no RUL labels")
    rows = []
    records = []
    for (uid, series), actual in zip(test_ds.instances, test_ds.rul_labels):
        est, curve = predict_one(bundle, series)
        rows.append(
            InstanceEstimate(
                test_id=uid,
                estimate=est,
                actual=actual,
                observed_len=curve.length,
            )
        )
        records.append(
            EvalRecord(
                predicted=est.value, actual=actual, observed_len=curve.length
            )
        )
    report = full_report(records, bundle.config.tau1, bundle.config.tau2)
    return report, rows


@dataclass(frozen=True)
class SweepTrial:
    """One grid point's outcome."""

    overrides: dict[str, str]
    config: RunConfig
    score: float


def run_sweep(
    ds: RunToFailureDataset, base: RunConfig, grid: SweepGrid
) -> tuple[SweepTrial, list[SweepTrial]]:
    """Grid search scored by timeliness on truncated validation instances.

    Every grid point trains a pipeline on the same data with the same seed,
    then scores the validation split truncated at the five standard life
    fractions. Lowest score wins; ties keep the earliest grid point in the
    deterministic enumeration order.

    Returns:
        (best trial, all trials in enumeration order).
    """
    combos = grid.combinations()
    if not combos:
        raise ValueError("empty sweep grid")
    trials = []
    for overrides in combos:
        config = apply_overrides(base, overrides)
        bundle, info = build_pipeline(ds, config)
        by_id = dict(ds.instances)
        val_ds = RunToFailureDataset(
            instances=[(uid, by_id[uid]) for uid in info.val_ids],
            sensor_names=ds.sensor_names,
        )
        cases = truncate_at_fracs(val_ds, list(SWEEP_TRUNCATION_FRACS))
        records = []
        for (uid, series), actual in zip(cases.instances, cases.rul_labels):
            est, curve = predict_one(bundle, series)
            records.append(
                EvalRecord(predicted=est.value, actual=actual, observed_len=curve.length)
            )
        score = timeliness(records, config.tau1, config.tau2)
        trials.append(SweepTrial(overrides=overrides, config=config, score=score))
    best = min(trials, key=lambda t: t.score)
    return best, trials
