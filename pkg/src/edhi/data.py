"""Dataset parsing, synthesis, and text output.

Two input formats are supported: the 26-column whitespace-delimited turbofan
layout (unit, cycle, 3 operating settings, 21 sensors) and a generic CSV
with a header row (instance_id, cycle, sensor columns). Both are validated
hard: every malformed row is reported with its line number, and cycle
indices must run 1..L contiguously per instance, which the matching math
relies on. The synthetic generator produces seeded run-to-failure instances
whose sensors drift from a healthy baseline once a fault sets in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TURBOFAN_COLUMNS = 26  # unit, cycle, 3 settings, 21 sensors
DEGRADATION_SHAPES = ("linear", "exponential", "piecewise")


@dataclass(frozen=True)
class RunToFailureDataset:
    """Instances plus optional truncation ground truth.

    Attributes:
        instances: (id, series) pairs; series shape (L_u, m), cycle t at
            row t-1.
        rul_labels: True remaining cycles per instance for truncated test
            sets; None for full run-to-failure data.
        sensor_names: Column labels, length m.
    """

    instances: list[tuple[str, np.ndarray]]
    rul_labels: list[float] | None = None
    sensor_names: list[str] | None = None

    def validate(self) -> None:
        ids = [uid for uid, _ in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids")
        if self.rul_labels is not None and len(self.rul_labels) != len(self.instances):
            raise ValueError(
                f"{len(self.rul_labels)} RUL labels for {len(self.instances)} instances"
            )

    @property
    def n_sensors(self) -> int:
        return self.instances[0][1].shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Settings for the synthetic run-to-failure generator."""

    n_instances: int = 40
    n_sensors: int = 5
    min_len: int = 80
    max_len: int = 120
    noise_std: float = 0.05
    fault_onset_frac: float = 0.3
    degradation_shape: str = "exponential"
    seed: int = 0

    def validate(self) -> None:
        if self.n_instances < 1:
            raise ValueError(f"n_instances must be >= 1, got {self.n_instances}")
        if self.n_sensors < 1:
            raise ValueError(f"n_sensors must be >= 1, got {self.n_sensors}")
        if not 2 <= self.min_len <= self.max_len:
            raise ValueError(
                f"need 2 <= min_len <= max_len, got {self.min_len}, {self.max_len}"
            )
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if not 0.0 < self.fault_onset_frac < 1.0:
            raise ValueError(
                f"fault_onset_frac must be in (0,1), got {self.fault_onset_frac}"
            )
        if self.degradation_shape not in DEGRADATION_SHAPES:
            raise ValueError(
                f"unknown shape {self.degradation_shape!r}, "
                f"expected one of {DEGRADATION_SHAPES}"
            )


def _parse_float(token: str, lineno: int, path_hint: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(
            f"{path_hint} line {lineno}: non-numeric value {token!r}"
        ) from None


def _group_rows(
    rows: list[tuple[str, int, list[float]]], path_hint: str
) -> list[tuple[str, np.ndarray]]:
    """Group (unit, cycle, sensors) rows into per-instance matrices.

    Enforces contiguous cycles 1..L within each unit.
    """
    by_unit: dict[str, list[tuple[int, list[float]]]] = {}
    order: list[str] = []
    for unit, cycle, sensors in rows:
        if unit not in by_unit:
            by_unit[unit] = []
            order.append(unit)
        by_unit[unit].append((cycle, sensors))
    instances = []
    for unit in order:
        entries = sorted(by_unit[unit], key=lambda e: e[0])
        cycles = [c for c, _ in entries]
        if cycles != list(range(1, len(cycles) + 1)):
            raise ValueError(
                f"{path_hint}: unit {unit} cycles are not contiguous 1..L"
            )
        instances.append((unit, np.array([s for _, s in entries], dtype=np.float64)))
    return instances


def _parse_turbofan_file(text: str, path_hint: str) -> list[tuple[str, np.ndarray]]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != TURBOFAN_COLUMNS:
            raise ValueError(
                f"{path_hint} line {lineno}: expected {TURBOFAN_COLUMNS} columns,"
                f" got {len(tokens)}"
            )
        unit = str(int(_parse_float(tokens[0], lineno, path_hint)))
        cycle = int(_parse_float(tokens[1], lineno, path_hint))
        sensors = [_parse_float(tok, lineno, path_hint) for tok in tokens[2:]]
        rows.append((unit, cycle, sensors))
    if not rows:
        raise ValueError(f"{path_hint}: no data rows")
    return _group_rows(rows, path_hint)


def parse_rul_labels(text: str, path_hint: str = "rul") -> list[float]:
    """One true RUL per line."""
    labels = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        labels.append(_parse_float(line, lineno, path_hint))
    if not labels:
        raise ValueError(f"{path_hint}: no labels")
    return labels


def _turbofan_names() -> list[str]:
    return [f"setting_{j + 1}" for j in range(3)] + [
        f"sensor_{j + 1}" for j in range(21)
    ]


def parse_turbofan_series(text: str, path_hint: str = "data") -> RunToFailureDataset:
    """Parse one whitespace-separated 26-column turbofan file, no labels."""
    ds = RunToFailureDataset(
        instances=_parse_turbofan_file(text, path_hint),
        sensor_names=_turbofan_names(),
    )
    ds.validate()
    return ds


def parse_turbofan(
    train_text: str, test_text: str, rul_text: str
) -> tuple[RunToFailureDataset, RunToFailureDataset]:
    """Parse the turbofan triple: train series, test series, test RULs.

    Returns:
        (train, test) datasets; the test set carries its RUL labels.

    Raises:
        ValueError: On malformed rows (with line numbers), non-contiguous
            cycles, or a label count that does not match the test set.
    """
    train = parse_turbofan_series(train_text, "train")
    labels = parse_rul_labels(rul_text, "rul")
    test = RunToFailureDataset(
        instances=_parse_turbofan_file(test_text, "test"),
        rul_labels=labels,
        sensor_names=_turbofan_names(),
    )
    test.validate()
    return train, test


def parse_generic(text: str, path_hint: str = "data") -> RunToFailureDataset:
    """Parse the generic CSV format: header then instance_id,cycle,sensors.

    Raises:
        ValueError: On a malformed header or row, with line numbers.
    """
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path_hint}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 3 or header[0] != "instance_id" or header[1] != "cycle":
        raise ValueError(
            f"{path_hint} line 1: header must start with instance_id,cycle"
        )
    n_sensors = len(header) - 2
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(header):
            raise ValueError(
                f"{path_hint} line {lineno}: expected {len(header)} columns,"
                f" got {len(tokens)}"
            )
        unit = tokens[0]
        cycle = int(_parse_float(tokens[1], lineno, path_hint))
        sensors = [_parse_float(tok, lineno, path_hint) for tok in tokens[2:]]
        rows.append((unit, cycle, sensors))
    if not rows:
        raise ValueError(f"{path_hint}: no data rows")
    ds = RunToFailureDataset(
        instances=_group_rows(rows, path_hint), sensor_names=header[2:]
    )
    ds.validate()
    if ds.n_sensors != n_sensors:
        raise ValueError(f"{path_hint}: sensor column mismatch")
    return ds


def write_generic(ds: RunToFailureDataset) -> str:
    """Render a dataset in the generic CSV format (parse_generic's inverse)."""
    m = ds.n_sensors
    names = ds.sensor_names or [f"sensor_{j + 1}" for j in range(m)]
    lines = ["instance_id,cycle," + ",".join(names)]
    for uid, series in ds.instances:
        for t in range(series.shape[0]):
            vals = ",".join(repr(float(v)) for v in series[t])
            lines.append(f"{uid},{t + 1},{vals}")
    return "\n".join(lines) + "\n"


def write_rul_labels(labels: list[float]) -> str:
    return "\n".join(repr(float(r)) for r in labels) + "\n"


def _shape_fn(name: str):
    if name == "linear":
        return lambda tau: tau
    if name == "exponential":
        return lambda tau: (np.expm1(3.0 * tau)) / (np.expm1(3.0))
    # piecewise: slow drift to 0.2 by midlife, then steep to 1.0
    return lambda tau: np.where(tau <= 0.5, 0.4 * tau, 0.2 + 1.6 * (tau - 0.5))


def generate_synthetic(spec: SyntheticSpec) -> RunToFailureDataset:
    """Seeded synthetic run-to-failure data.

    Each instance holds its per-sensor healthy baseline (offsets drawn in
    [-0.5, 0.5], small against the drift so pooled normalization leaves a
    shared healthy level) plus Gaussian noise; from the fault onset onward a
    degradation term of the chosen shape grows from 0 to a per-sensor
    severity (magnitude 1.5-3, a narrow spread because units fail when
    degradation crosses a fleet-common threshold) at end of life. Drift
    direction is a fleet property: each sensor's sign is drawn once and
    shared by every instance, the way a physical quantity degrades the same
    way on every unit.

    Returns:
        Full run-to-failure dataset, deterministic in the seed.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    shape = _shape_fn(spec.degradation_shape)
    signs = rng.choice([-1.0, 1.0], size=spec.n_sensors)
    instances = []
    for u in range(spec.n_instances):
        length = int(rng.integers(spec.min_len, spec.max_len + 1))
        offsets = rng.uniform(-0.5, 0.5, size=spec.n_sensors)
        severities = rng.uniform(1.5, 3.0, size=spec.n_sensors) * signs
        onset = int(math.floor(spec.fault_onset_frac * length))
        t = np.arange(length, dtype=np.float64)
        progress = np.zeros(length)
        span = max(1, (length - 1) - onset)
        post = t >= onset
        progress[post] = (t[post] - onset) / span
        drift = shape(progress)[:, None] * severities[None, :]
        drift[~post] = 0.0
        noise = rng.normal(0.0, spec.noise_std, size=(length, spec.n_sensors))
        series = offsets[None, :] + drift + noise
        instances.append((f"s{u + 1}", series))
    return RunToFailureDataset(
        instances=instances,
        sensor_names=[f"sensor_{j + 1}" for j in range(spec.n_sensors)],
    )


def truncate_instance(series: np.ndarray, frac: float) -> tuple[np.ndarray, float]:
    """Cut one full-life series at a life fraction; returns (prefix, true RUL).

    The observed length is floor(frac * L) clamped to [1, L-1], so there is
    always at least one observed and one remaining cycle.
    """
    length = series.shape[0]
    if length < 2:
        raise ValueError("need at least 2 cycles to truncate")
    observed = int(math.floor(frac * length + 1e-9))
    observed = min(max(observed, 1), length - 1)
    return series[:observed], float(length - observed)


def truncate_random(
    ds: RunToFailureDataset, lo: float, hi: float, seed: int
) -> RunToFailureDataset:
    """Truncate every instance at a life fraction drawn uniformly in [lo, hi]."""
    if not 0.0 < lo <= hi < 1.0:
        raise ValueError(f"need 0 < lo <= hi < 1, got {lo}, {hi}")
    rng = np.random.default_rng(seed)
    instances = []
    labels = []
    for uid, series in ds.instances:
        prefix, rul = truncate_instance(series, float(rng.uniform(lo, hi)))
        instances.append((uid, prefix))
        labels.append(rul)
    return RunToFailureDataset(
        instances=instances, rul_labels=labels, sensor_names=ds.sensor_names
    )


def truncate_at_fracs(
    ds: RunToFailureDataset, fracs: list[float]
) -> RunToFailureDataset:
    """Truncate every instance at each listed fraction (the sweep's scorer).

    Produces len(fracs) cases per instance with ids "<uid>@<k>"; order is
    instance-major, fraction-minor, deterministically.
    """
    instances = []
    labels = []
    for uid, series in ds.instances:
        for k, frac in enumerate(fracs):
            prefix, rul = truncate_instance(series, frac)
            instances.append((f"{uid}@{k}", prefix))
            labels.append(rul)
    return RunToFailureDataset(
        instances=instances, rul_labels=labels, sensor_names=ds.sensor_names
    )
