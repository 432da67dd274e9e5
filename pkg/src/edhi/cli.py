"""Command line front end: train, evaluate, predict, synth, sweep.

Config resolution order for train and sweep is defaults, then the
--config file, then individual flags, so a flag always wins. Every
command prints human-readable output; machine-readable results go to the
paths given by --out and friends. Any error prints one ``error:`` line
to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path

from .config import (
    RunConfig,
    apply_overrides,
    parse_config_text,
    parse_sweep_grid,
)
from .data import (
    RunToFailureDataset,
    SyntheticSpec,
    generate_synthetic,
    parse_generic,
    parse_rul_labels,
    parse_turbofan_series,
    truncate_random,
    write_generic,
    write_rul_labels,
)
from .health import HiCurve
from .persist import load_pipeline, save_pipeline
from .pipeline import (
    StageError,
    build_pipeline,
    evaluate_pipeline,
    predict_one,
    run_sweep,
    series_hi_curve,
)

_CONFIG_HELP = {
    "p": "derived sensors kept after projection",
    "c": "LSTM hidden units",
    "l": "window length",
    "tau": "maximum matching time-lag",
    "alpha": "similarity cutoff fraction of the best match",
    "r_max": "cap on RUL estimates",
    "lam": "similarity kernel width",
    "beta": "exponential target HI shape",
    "hi_variant": "target HI construction",
    "smooth_window": "moving-average width for HI curves",
    "init_frac": "leading fraction defining initial health",
    "validation_frac": "instance fraction held out for early stopping",
    "healthy_frac": "leading healthy fraction for training windows ('none' = first window only)",
    "faulty_frac": "trailing fraction labeled faulty by the endpoints variant",
    "seed": "master seed",
    "tau1": "early-prediction tolerance in cycles",
    "tau2": "late-prediction tolerance in cycles",
    "learning_rate": "optimizer step size",
    "max_epochs": "training epoch limit",
    "batch_size": "windows per training batch",
    "grad_clip_norm": "global gradient norm clip",
    "patience": "early-stopping patience in epochs",
}


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_argument_group("config overrides")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        names = [flag, "--lambda"] if f.name == "lam" else [flag]
        group.add_argument(
            *names,
            dest=f"cfg_{f.name}",
            metavar="V",
            help=_CONFIG_HELP.get(f.name, ""),
        )


def _add_data_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", required=True, help="series file")
    sub.add_argument(
        "--format",
        dest="file_format",
        choices=("auto", "generic", "turbofan"),
        default="auto",
        help="series file layout (default: sniff)",
    )


def _cli_overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for f in fields(RunConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            out[f.name] = value
    return out


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        config = apply_overrides(
            config, parse_config_text(Path(args.config).read_text())
        )
    return apply_overrides(config, _cli_overrides(args))


def _sniff_format(text: str) -> str:
    for line in text.splitlines():
        if line.strip():
            first = line.split(",")[0].strip()
            return "generic" if first == "instance_id" else "turbofan"
    raise ValueError("empty data file")


def _load_dataset(
    path: str, file_format: str, rul_path: str | None = None
) -> RunToFailureDataset:
    text = Path(path).read_text()
    fmt = _sniff_format(text) if file_format == "auto" else file_format
    if fmt == "generic":
        ds = parse_generic(text, path)
    else:
        ds = parse_turbofan_series(text, path)
    if rul_path is None:
        return ds
    labels = parse_rul_labels(Path(rul_path).read_text(), rul_path)
    if len(labels) != len(ds.instances):
        raise ValueError(
            f"{rul_path}: {len(labels)} labels for {len(ds.instances)} instances"
        )
    return RunToFailureDataset(
        instances=ds.instances, rul_labels=labels, sensor_names=ds.sensor_names
    )


def _write_curve(path: Path, curve: HiCurve) -> None:
    lines = ["cycle,hi"]
    for t, v in enumerate(curve.values, start=1):
        lines.append(f"{t},{float(v)!r}")
    path.write_text("\n".join(lines) + "\n")


def _flag(value: bool) -> str:
    return "true" if value else "false"


def cmd_train(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ds = _load_dataset(args.data, args.file_format)
    bundle, info = build_pipeline(ds, config)
    out = Path(args.out)
    save_pipeline(out, bundle)

    result = info.train_result
    log_path = Path(args.log) if args.log else out.with_suffix(out.suffix + ".log")
    lines = [
        f"fit_instances {len(info.fit_ids)}",
        f"val_instances {len(info.val_ids)}",
    ]
    for epoch, (tr, va) in enumerate(zip(result.train_history, result.val_history)):
        lines.append(f"epoch {epoch} train_loss {tr:.10g} val_loss {va:.10g}")
    lines.append(f"best_epoch {result.best_epoch}")
    lines.append(f"best_val_loss {result.val_history[result.best_epoch]:.10g}")
    log_path.write_text("\n".join(lines) + "\n")

    print(f"trained on {len(info.fit_ids)} instances, {len(info.val_ids)} held out")
    print(
        f"best epoch {result.best_epoch}, validation loss "
        f"{result.val_history[result.best_epoch]:.6g}"
    )
    print(f"wrote {out}")
    print(f"wrote {log_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    bundle = load_pipeline(args.pipeline)
    if args.tau1 is not None or args.tau2 is not None:
        cfg = bundle.config
        cfg = replace(
            cfg,
            tau1=float(args.tau1) if args.tau1 is not None else cfg.tau1,
            tau2=float(args.tau2) if args.tau2 is not None else cfg.tau2,
        )
        bundle = replace(bundle, config=cfg)
    ds = _load_dataset(args.data, args.file_format, rul_path=args.rul)
    report, rows = evaluate_pipeline(bundle, ds)
    print(report.as_table())

    if args.out:
        lines = ["test_id,rul_estimate,std_dev,spread,n_candidates,capped"]
        for row in rows:
            est = row.estimate
            lines.append(
                f"{row.test_id},{float(est.value)!r},{float(est.std_dev)!r},"
                f"{float(est.spread)!r},{len(est.candidates)},{_flag(est.capped)}"
            )
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    if args.curves_dir:
        curves_dir = Path(args.curves_dir)
        curves_dir.mkdir(parents=True, exist_ok=True)
        for uid, series in ds.instances:
            _write_curve(curves_dir / f"{uid}.csv", series_hi_curve(bundle, series))
        print(f"wrote {len(ds.instances)} curves to {curves_dir}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    bundle = load_pipeline(args.pipeline)
    ds = _load_dataset(args.data, args.file_format)
    if args.instance is not None:
        by_id = dict(ds.instances)
        if args.instance not in by_id:
            raise ValueError(f"instance {args.instance!r} not in {args.data}")
        uid, series = args.instance, by_id[args.instance]
    elif len(ds.instances) == 1:
        uid, series = ds.instances[0]
    else:
        raise ValueError(
            f"{args.data} has {len(ds.instances)} instances; pass --instance"
        )
    est, curve = predict_one(bundle, series)
    print(f"instance {uid}")
    print(f"observed_cycles {curve.length}")
    print(f"rul_estimate {est.value:.6g}")
    print(f"std_dev {est.std_dev:.6g}")
    print(f"spread {est.spread:.6g}")
    print(f"n_candidates {len(est.candidates)}")
    print(f"capped {_flag(est.capped)}")
    print(f"fallback {_flag(est.fallback)}")
    if args.curve_out:
        _write_curve(Path(args.curve_out), curve)
        print(f"wrote {args.curve_out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_instances=args.n_instances,
        n_sensors=args.n_sensors,
        min_len=args.min_len,
        max_len=args.max_len,
        noise_std=args.noise_std,
        fault_onset_frac=args.fault_onset_frac,
        degradation_shape=args.shape,
        seed=args.seed,
    )
    ds = generate_synthetic(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / "data.csv"
    data_path.write_text(write_generic(ds))
    print(f"wrote {data_path} ({args.n_instances} instances)")
    if args.truncate:
        parts = args.truncate.split(",")
        if len(parts) != 2:
            raise ValueError(f"--truncate expects LO,HI, got {args.truncate!r}")
        lo, hi = (float(part) for part in parts)
        seed = args.truncate_seed if args.truncate_seed is not None else args.seed + 1
        truncated = truncate_random(ds, lo, hi, seed)
        trunc_path = out_dir / "truncated.csv"
        rul_path = out_dir / "rul.txt"
        trunc_path.write_text(write_generic(truncated))
        rul_path.write_text(write_rul_labels(truncated.rul_labels))
        print(f"wrote {trunc_path}")
        print(f"wrote {rul_path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = RunConfig()
    base = apply_overrides(base, _cli_overrides(args))
    grid = parse_sweep_grid(parse_config_text(Path(args.config).read_text()))
    ds = _load_dataset(args.data, args.file_format)
    best, trials = run_sweep(ds, base, grid)
    keys = sorted(grid.values)
    for k, trial in enumerate(trials):
        settings = " ".join(f"{key}={trial.overrides[key]}" for key in keys)
        print(f"trial {k} score {trial.score:.6g} {settings}")
    best_settings = " ".join(f"{key}={best.overrides[key]}" for key in keys)
    print(f"best score {best.score:.6g} {best_settings}")
    if args.out:
        lines = ["trial,score," + ",".join(keys)]
        for k, trial in enumerate(trials):
            vals = ",".join(trial.overrides[key] for key in keys)
            lines.append(f"{k},{float(trial.score)!r},{vals}")
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edhi",
        description="Health-index learning and RUL estimation for run-to-failure data",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    train = subs.add_parser("train", help="fit a pipeline and save it")
    _add_data_flags(train)
    train.add_argument("--config", help="key=value config file")
    train.add_argument("--out", default="pipeline.edhi", help="pipeline output path")
    train.add_argument("--log", help="training log path (default: <out>.log)")
    _add_config_flags(train)
    train.set_defaults(func=cmd_train)

    ev = subs.add_parser("evaluate", help="score a pipeline on a labeled test set")
    ev.add_argument("--pipeline", required=True, help="saved pipeline path")
    _add_data_flags(ev)
    ev.add_argument("--rul", required=True, help="true RUL per test instance")
    ev.add_argument("--tau1", metavar="V", help="early tolerance override")
    ev.add_argument("--tau2", metavar="V", help="late tolerance override")
    ev.add_argument("--out", help="per-instance estimates CSV")
    ev.add_argument("--curves-dir", help="directory for per-instance HI curves")
    ev.set_defaults(func=cmd_evaluate)

    pred = subs.add_parser("predict", help="estimate RUL for one instance")
    pred.add_argument("--pipeline", required=True, help="saved pipeline path")
    _add_data_flags(pred)
    pred.add_argument("--instance", help="instance id when the file has several")
    pred.add_argument("--curve-out", help="write the instance's HI curve here")
    pred.set_defaults(func=cmd_predict)

    synth = subs.add_parser("synth", help="generate synthetic run-to-failure data")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--n-instances", type=int, default=40)
    synth.add_argument("--n-sensors", type=int, default=5)
    synth.add_argument("--min-len", type=int, default=80)
    synth.add_argument("--max-len", type=int, default=120)
    synth.add_argument("--noise-std", type=float, default=0.05)
    synth.add_argument("--fault-onset-frac", type=float, default=0.3)
    synth.add_argument(
        "--shape",
        choices=("linear", "exponential", "piecewise"),
        default="exponential",
        help="degradation drift shape",
    )
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument(
        "--truncate",
        metavar="LO,HI",
        help="also write a test copy truncated at a uniform life fraction",
    )
    synth.add_argument("--truncate-seed", type=int, help="default: seed + 1")
    synth.set_defaults(func=cmd_synth)

    sweep = subs.add_parser("sweep", help="grid-search config values")
    _add_data_flags(sweep)
    sweep.add_argument(
        "--config", required=True, help="config file; comma lists form the grid"
    )
    sweep.add_argument("--out", help="per-trial results CSV")
    _add_config_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
