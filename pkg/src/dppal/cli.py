"""Command-line interface: run, sweep, report and corpus generation."""

from __future__ import annotations

import csv
from pathlib import Path

import click

from .alsim import (
    CURVE_COLUMNS,
    run_experiment,
    sweep_experiment,
    write_rows_csv,
)
from .config import PROFILES, RunConfig, config_from_mapping, load_config
from .datagen import write_corpus_files

_CONFIG_OPTIONS = [
    ("corpus", str, "Training CoNLL-U file"),
    ("test_corpus", str, "Held-out CoNLL-U file (default: every 10th training sentence)"),
    ("fold", int, "Corpus duplication factor"),
    ("strategy", str, "RANDOM | AMP | BALD | ID"),
    ("diversity_kind", str, "AVERAGED | SUBGRAPH"),
    ("n_seed_sentences", int, "Seed sentences for round 0"),
    ("sentence_stage_token_budget", int, "Stage-1 token budget"),
    ("token_budget_per_round", int, "Stage-2 tokens annotated per round"),
    ("rounds", int, "Number of AL rounds"),
    ("k_bald", int, "Committee size for BALD"),
    ("p_drop", float, "Feature dropout probability"),
    ("seed", int, "Global RNG seed"),
    ("learning_rate", float, "SGD learning rate"),
    ("epochs", int, "Training epochs per round"),
    ("hash_dim", int, "Feature hash space (power of two)"),
    ("projection_dim", int, "Averaged-feature dimension"),
    ("projection_seed", int, "Averaged-feature projection seed"),
    ("candidate_cap", int, "Max candidates entering a DPP kernel"),
]


def _config_flags(func):
    for name, ftype, help_text in reversed(_CONFIG_OPTIONS):
        flag = "--" + name.replace("_", "-")
        func = click.option(flag, type=ftype, default=None, help=help_text)(func)
    func = click.option("--use-dpp/--no-dpp", "use_dpp", default=None, help="Diversity-aware selection")(func)
    func = click.option("--single-root/--multi-root", "single_root", default=None, help="Root arity constraint")(func)
    func = click.option("--save-models/--no-save-models", "save_models", default=None, help="Write per-round checkpoints")(func)
    func = click.option(
        "--profile", type=click.Choice(sorted(PROFILES)), default=None, help="Preset budgets"
    )(func)
    func = click.option(
        "--config", "config_path", type=click.Path(exists=True), default=None, help="TOML/JSON config file"
    )(func)
    return func


def _build_config(config_path: str | None, profile: str | None, overrides: dict) -> RunConfig:
    """Precedence: explicit flags > --profile presets > config file values."""
    base = load_config(config_path).to_dict() if config_path else {}
    if profile:
        base.update(PROFILES[profile])
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if "corpus" not in base or base["corpus"] is None:
        raise click.UsageError("a corpus is required (--corpus or a config file)")
    return config_from_mapping(base)


@click.group()
def main() -> None:
    """Diversity-aware batch active learning for dependency parsing."""


@main.command()
@_config_flags
@click.option("--repeats", type=int, default=1, show_default=True, help="Independent runs")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory")
def run(config_path, profile, repeats, out_dir, **overrides) -> None:
    """Run one configuration and write curves/diversity/selection files."""
    config = _build_config(config_path, profile, overrides)
    report = run_experiment(config, repeats, out_dir)
    final = report.curve_rows()[-1]
    click.echo(
        f"{config.strategy}{' +DPP' if config.use_dpp else ''}: "
        f"round {final['round']} LAS {final['mean_las']:.2f} ± {final['std_las']:.2f} "
        f"(outputs in {out_dir})"
    )


@main.command()
@_config_flags
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option(
    "--strategies",
    type=str,
    default="RANDOM,AMP,BALD,ID",
    show_default=True,
    help="Comma-separated strategy subset",
)
def sweep(config_path, profile, repeats, out_dir, strategies, **overrides) -> None:
    """Run the strategy x DPP grid and write merged CSVs."""
    overrides.pop("use_dpp", None)  # the grid owns this axis
    config = _build_config(config_path, profile, overrides)
    strategy_list = [s.strip().upper() for s in strategies.split(",") if s.strip()]
    reports = sweep_experiment(config, repeats, out_dir, strategies=strategy_list)
    for rep in reports:
        final = rep.curve_rows()[-1]
        click.echo(
            f"{rep.config.strategy:>6}{' +DPP' if rep.config.use_dpp else '     '}: "
            f"final LAS {final['mean_las']:.2f} ± {final['std_las']:.2f}"
        )


@main.command()
@click.argument("run_dirs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Merged curves CSV")
def report(run_dirs, out_path) -> None:
    """Aggregate curves.csv files from run directories into one table."""
    rows = []
    for d in run_dirs:
        for curve in sorted(Path(d).rglob("curves.csv")):
            with curve.open(encoding="utf-8") as fh:
                rows.extend(list(csv.DictReader(fh)))
    if not rows:
        raise click.UsageError("no curves.csv found under the given directories")
    seen = set()
    uniq = []
    for row in rows:
        key = (row["round"], row["strategy"], row["use_dpp"], row["mean_las"])
        if key not in seen:
            seen.add(key)
            uniq.append(row)
    final_round = max(int(r["round"]) for r in uniq)
    click.echo(f"{'strategy':>8} {'dpp':>5} {'round':>5} {'LAS':>16} {'UAS':>16}")
    for row in uniq:
        if int(row["round"]) == final_round:
            click.echo(
                f"{row['strategy']:>8} {row['use_dpp']:>5} {row['round']:>5} "
                f"{float(row['mean_las']):>8.2f} ± {float(row['std_las']):<5.2f} "
                f"{float(row['mean_uas']):>8.2f} ± {float(row['std_uas']):<5.2f}"
            )
    if out_path:
        typed = [
            {
                "round": int(r["round"]),
                "strategy": r["strategy"],
                "use_dpp": r["use_dpp"] == "true",
                "mean_las": float(r["mean_las"]),
                "std_las": float(r["std_las"]),
                "mean_uas": float(r["mean_uas"]),
                "std_uas": float(r["std_uas"]),
            }
            for r in uniq
        ]
        write_rows_csv(typed, CURVE_COLUMNS, Path(out_path))
        click.echo(f"merged curves written to {out_path}")


@main.command("make-corpus")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--train-sentences", type=int, default=2000, show_default=True)
@click.option("--test-sentences", type=int, default=400, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def make_corpus_cmd(out_dir, train_sentences, test_sentences, seed) -> None:
    """Generate a synthetic gold-annotated CoNLL-U train/test pair."""
    train_path, test_path = write_corpus_files(out_dir, train_sentences, test_sentences, seed)
    click.echo(f"wrote {train_path} ({train_sentences} sentences), {test_path} ({test_sentences})")


if __name__ == "__main__":
    main()
