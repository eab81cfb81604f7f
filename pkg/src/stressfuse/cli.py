"""Command-line entry point.

Commands::

    stressfuse synth  --subjects 4 --duration 600 --seed 7 --out data/
    stressfuse train  --data data/ --out model.json [--problem 3class] ...
    stressfuse eval   --data data/ --out results/ [--fusion kalman] ...
    stressfuse sweep  --data data/ --out results/ --deltas 0,0.2,0.4,1.0
    stressfuse energy --data data/ --out results/ [--delta 0.4] ...

Every command is deterministic given ``--seed`` and its inputs (output
files are written bit-identically across repeat runs). Exit codes: 0
success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_pipeline_config
from .errors import ConfigurationError, StressFuseError
from .eval import (
    FUSION_KINDS,
    aggregate,
    evaluate_fold,
    prepare_table,
    run_loso,
    save_bundle,
    train_folds,
    train_full,
    write_energy_csv,
    write_results_csv,
    write_summary_csv,
)
from .ingest import generate_synthetic, load_dataset, write_subject


def _add_run_arguments(sp):
    sp.add_argument("--data", required=True, help="dataset root (subject dirs)")
    sp.add_argument("--config", help="flat key = value config file")
    sp.add_argument("--problem", choices=("3class", "2class"))
    sp.add_argument("--fusion", choices=FUSION_KINDS)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stressfuse",
        description="Selective sensor fusion for wrist-based stress classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    sp.add_argument("--subjects", type=int, required=True)
    sp.add_argument("--duration", type=float, required=True, help="seconds per subject")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train on the full dataset, save a model bundle")
    _add_run_arguments(sp)
    sp.add_argument("--out", required=True, help="bundle file to write")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="LOSO evaluation; writes results/summary/energy CSVs")
    _add_run_arguments(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="evaluate a grid of delta values")
    _add_run_arguments(sp)
    sp.add_argument("--deltas", required=True, help="comma-separated delta values")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("energy", help="energy accounting only")
    _add_run_arguments(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_energy)

    return parser


def _config_from_args(args):
    overrides = {
        "problem": args.problem,
        "fusion": args.fusion,
        "delta": args.delta,
        "k": args.k,
        "seed": args.seed,
    }
    return load_pipeline_config(args.config, **overrides)


def cmd_synth(args):
    records = generate_synthetic(args.subjects, args.duration, args.seed)
    out = Path(args.out)
    for record in records:
        write_subject(record, out / record.subject_id)
    print(f"wrote {len(records)} subjects to {out}")
    return 0


def cmd_train(args):
    config = _config_from_args(args)
    records = load_dataset(args.data)
    table = prepare_table(records, config)
    trained = train_full(table, config)
    save_bundle(args.out, trained.specs, trained.models, trained.gate_model, config)
    chosen = ", ".join(f"{s.id}-{s.kind}" for s in trained.specs)
    print(f"trained on {len(table.windows)} windows from {len(records)} subjects")
    print(f"selected branches: {chosen}")
    print(f"bundle written to {args.out}")
    return 0


def _print_result(result):
    print(f"windows evaluated: {result.diagnostics['n_windows']}")
    if result.diagnostics.get("dropped_windows"):
        print(f"windows dropped (extraction failure): {result.diagnostics['dropped_windows']}")
    print(f"micro accuracy:  {result.micro_accuracy:.4f}")
    print(f"micro macro-F1:  {result.micro_macro_f1:.4f}")
    print(f"mean accuracy:   {result.mean_accuracy:.4f}")
    print(f"mean macro-F1:   {result.mean_macro_f1:.4f}")
    print(f"energy ratio vs always-on baseline: {result.energy_ratio:.3f}x")


def cmd_eval(args):
    config = _config_from_args(args)
    records = load_dataset(args.data)
    result = run_loso(records, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(out / "results.csv", result)
    write_summary_csv(out / "summary.csv", result)
    write_energy_csv(out / "energy.csv", result)
    _print_result(result)
    print(f"reports written to {out}")
    return 0


def _parse_deltas(raw):
    parts = [p for p in (s.strip() for s in raw.split(",")) if p]
    if not parts:
        raise ConfigurationError("--deltas must list at least one value")
    try:
        deltas = [float(p) for p in parts]
    except ValueError:
        raise ConfigurationError(f"bad --deltas value in {raw!r}") from None
    for d in deltas:
        if not 0.0 <= d <= 1.0:
            raise ConfigurationError(f"delta {d} outside [0, 1]")
    return deltas


def cmd_sweep(args):
    deltas = _parse_deltas(args.deltas)
    config = _config_from_args(args)
    records = load_dataset(args.data)
    table = prepare_table(records, config)
    trained = train_folds(
        table,
        config,
        subjects=[r.subject_id for r in records if r.subject_id in table.rows_by_subject()],
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for delta in deltas:
        cfg = replace(config, delta=delta)
        results = [evaluate_fold(table, tf, cfg) for tf in trained]
        agg = aggregate(results, cfg.n_classes)
        invocations = sum(
            sum(f.energy.branch_counts.values()) for f in agg.folds
        )
        mean_selected = invocations / agg.diagnostics["n_windows"]
        rows.append((delta, agg, mean_selected))

    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        fh.write("delta,accuracy,macro_f1,energy_ratio,mean_selected_branches\n")
        for delta, agg, mean_selected in rows:
            fh.write(
                f"{delta!r},{agg.micro_accuracy!r},{agg.micro_macro_f1!r},"
                f"{agg.energy_ratio!r},{mean_selected!r}\n"
            )
    print(f"{'delta':>6}  {'acc':>7}  {'f1':>7}  {'ratio':>6}  {'branches':>8}")
    for delta, agg, mean_selected in rows:
        print(
            f"{delta:>6.2f}  {agg.micro_accuracy:>7.4f}  {agg.micro_macro_f1:>7.4f}"
            f"  {agg.energy_ratio:>6.3f}  {mean_selected:>8.2f}"
        )
    print(f"sweep written to {path}")
    return 0


def cmd_energy(args):
    config = _config_from_args(args)
    records = load_dataset(args.data)
    result = run_loso(records, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_energy_csv(out / "energy.csv", result)
    total = sum(f.energy.total for f in result.folds)
    print(f"windows: {result.diagnostics['n_windows']}")
    print(f"total cost: {total:.2f}")
    print(f"energy ratio vs always-on baseline: {result.energy_ratio:.3f}x")
    print(f"report written to {out / 'energy.csv'}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StressFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
