"""Run configuration: one flat record covering every pipeline stage.

Defaults are tuned for the turbofan benchmark (p=3, c=30, l=20, tau=40,
alpha=0.87, r_max=125, lambda=0.0005). Config
files are flat key=value text; "lambda" is accepted as an alias for the
``lam`` field since the bare word is reserved in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .health import HI_VARIANTS

# fields taking integer values; everything else numeric is a float
_INT_FIELDS = {
    "p",
    "c",
    "l",
    "tau",
    "smooth_window",
    "seed",
    "max_epochs",
    "batch_size",
    "patience",
}
_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class RunConfig:
    """Every knob of the train/evaluate/predict pipeline.

    Attributes:
        p: Principal components kept as derived sensors.
        c: LSTM hidden units.
        l: Window length.
        tau: Maximum matching time-lag.
        alpha: Similarity cutoff fraction of the best similarity.
        r_max: Cap on the RUL estimate.
        lam: Similarity kernel width (config-file alias: "lambda").
        beta: Shape parameter of the exponential target HI.
        hi_variant: Target-HI construction; one of HI_VARIANTS.
        smooth_window: Moving-average width for final HI curves.
        init_frac: Leading fraction defining initial health.
        validation_frac: Instance fraction held out for early stopping
            and sweep scoring.
        healthy_frac: Leading fraction of each instance treated as healthy
            training input; None trains on just the first window per
            instance.
        faulty_frac: Trailing fraction labeled 0 by the endpoints variant.
        seed: Master seed for splitting, initialization, and batching.
        tau1: Early-prediction tolerance (cycles).
        tau2: Late-prediction tolerance (cycles).
        learning_rate, max_epochs, batch_size, grad_clip_norm, patience:
            Optimizer settings passed through to training.
    """

    p: int = 3
    c: int = 30
    l: int = 20
    tau: int = 40
    alpha: float = 0.87
    r_max: float = 125.0
    lam: float = 0.0005
    beta: float = 0.05
    hi_variant: str = "recon_error_squared"
    smooth_window: int = 5
    init_frac: float = 0.05
    validation_frac: float = 0.2
    healthy_frac: float | None = None
    faulty_frac: float = 0.05
    seed: int = 0
    tau1: float = 13.0
    tau2: float = 10.0
    learning_rate: float = 1e-3
    max_epochs: int = 500
    batch_size: int = 32
    grad_clip_norm: float = 10.0
    patience: int = 10

    def validate(self) -> None:
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if self.r_max < 1:
            raise ValueError(f"r_max must be >= 1, got {self.r_max}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if self.hi_variant not in HI_VARIANTS:
            raise ValueError(
                f"unknown HI variant {self.hi_variant!r}, expected one of {HI_VARIANTS}"
            )
        if self.smooth_window < 1:
            raise ValueError(f"smooth_window must be >= 1, got {self.smooth_window}")
        if not 0.0 <= self.init_frac <= 1.0:
            raise ValueError(f"init_frac must be in [0,1], got {self.init_frac}")
        if not 0.0 <= self.validation_frac < 1.0:
            raise ValueError(
                f"validation_frac must be in [0,1), got {self.validation_frac}"
            )
        if self.healthy_frac is not None and not 0.0 < self.healthy_frac <= 1.0:
            raise ValueError(
                f"healthy_frac must be in (0,1] or unset, got {self.healthy_frac}"
            )
        if not 0.0 < self.faulty_frac <= 1.0:
            raise ValueError(f"faulty_frac must be in (0,1], got {self.faulty_frac}")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("tau1 and tau2 must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("max_epochs, batch_size, patience must be >= 1")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be > 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def config_from_dict(data: dict) -> RunConfig:
    """Rebuild a RunConfig from its to_dict form (e.g. a stored pipeline)."""
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return RunConfig(**data)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat key=value lines; # starts a comment, blank lines skipped.

    Raises:
        ValueError: On a line without '=', with the line number.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(name: str, value: str):
    if name == "hi_variant":
        return value
    if name == "healthy_frac":
        if value.lower() in ("none", ""):
            return None
        return float(value)
    if name in _INT_FIELDS:
        return int(value)
    return float(value)


def apply_overrides(base: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Apply string-valued settings (config file or CLI flags) onto a base.

    Raises:
        ValueError: On unknown keys or values that fail coercion.
    """
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    for key, value in overrides.items():
        name = _ALIASES.get(key, key)
        if name not in known:
            raise ValueError(f"unknown config key {key!r}")
        try:
            updates[name] = _coerce(name, value)
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: bad value {value!r}") from exc
    cfg = replace(base, **updates)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class SweepGrid:
    """Parameter grid for the sweep command: field name -> listed values."""

    values: dict[str, list] = field(default_factory=dict)

    def combinations(self) -> list[dict[str, str]]:
        """All grid points as override mappings, in deterministic order.

        Keys are enumerated sorted; values keep their listed order, the
        rightmost key varying fastest.
        """
        keys = sorted(self.values)
        combos: list[dict[str, str]] = [{}]
        for key in keys:
            combos = [
                {**combo, key: str(v)} for combo in combos for v in self.values[key]
            ]
        return combos


def parse_sweep_grid(mapping: dict[str, str]) -> SweepGrid:
    """Interpret comma-separated config values as grid dimensions.

    Single-valued keys become one-point dimensions, so the same file can
    drive both a run and a sweep.
    """
    known = {f.name for f in fields(RunConfig)}
    grid: dict[str, list] = {}
    for key, value in mapping.items():
        name = _ALIASES.get(key, key)
        if name not in known:
            raise ValueError(f"unknown config key {key!r}")
        grid[name] = [part.strip() for part in value.split(",") if part.strip()]
        if not grid[name]:
            raise ValueError(f"config key {key!r} has no values")
    return SweepGrid(values=grid)
