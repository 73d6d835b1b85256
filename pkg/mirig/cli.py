from pathlib import Path
from tomllib import loads as toml_loads
from typing import Callable

import pandas as pd
from click import Choice, Context, group, option, pass_context
from click import Path as ClickPath
from rich.table import Table

from mirig.cdpgen import CdpDataset, TaskSpec, read_packed, write_packed
from mirig.config import DatasetConfig, SweepConfig
from mirig.constants import DEFAULT_CONFIG_FILE
from mirig.harness import (
    RunReport,
    emit_report,
    load_dataset,
    run_case_batch_size,
    run_case_infomin,
    run_negative_sampling,
    run_task_grid,
    run_temperature_sweep,
)
from mirig.logger import CONSOLE
from mirig.metrics import kendall_tau, metric_report, pearson
from mirig.postestimator import check_bound, estimate_mi, honesty_check
from mirig.trainer import load_checkpoint, save_checkpoint, train

# Short column names accepted by `mirig corr`
COLUMN_ALIASES = {
    "acc": "accuracy",
    "mi_class": "mi_bits",
    "mi_simclr": "mi_simclr_bits",
}

FILE = ClickPath(path_type=Path, dir_okay=False)
DIRECTORY = ClickPath(path_type=Path, file_okay=False)


@group()
def cli():
    pass


@cli.command()
@option("--n", "n", type=int, default=4096, show_default=True)
@option("--seed", type=int, default=0, show_default=True)
@option("--size", type=Choice(["16", "32", "64"]), default="32", show_default=True)
@option("--mix", type=float, default=0.3, show_default=True)
@option("--out", type=DIRECTORY, required=True)
def gen(n: int, seed: int, size: str, mix: float, out: Path):
    """Generate a packed CDP dataset."""
    dataset = load_dataset(DatasetConfig(n=n, seed=seed, size=int(size), mix=mix))
    target = write_packed(dataset, out)
    CONSOLE.print(f"[green]Wrote {len(dataset)} samples to {target}[/green]")


@cli.command(name="train")
@option("--config", "config_path", type=FILE, default=DEFAULT_CONFIG_FILE)
@option("--data", type=ClickPath(path_type=Path), default=None)
@option("--out", type=FILE, required=True)
def train_command(config_path: Path, data: Path | None, out: Path):
    """Train an encoder with the [train] table of a config."""
    config = get_config(config_path)
    dataset = _dataset(config, data)
    checkpoint = train(config.train, dataset)
    save_checkpoint(checkpoint, out)
    CONSOLE.print(
        f"Saved checkpoint to {out}: in-training MI "
        f"[bold]{checkpoint.final_train_bits:.4f}[/bold] bits"
    )


@cli.command()
@option("--ckpt", type=FILE, required=True)
@option("--config", "config_path", type=FILE, default=DEFAULT_CONFIG_FILE)
@option("--data", type=ClickPath(path_type=Path), default=None)
@option("--out", type=FILE, required=True)
@pass_context
def estimate(ctx: Context, ckpt: Path, config_path: Path, data: Path | None, out: Path):
    """Post-training MI estimate of a frozen encoder."""
    config = get_config(config_path)
    result = estimate_mi(load_checkpoint(ckpt), config.estimate, _dataset(config, data))
    out.write_text(result.model_dump_json(indent=2) + "\n")

    bound, honesty = check_bound(result), honesty_check(result)
    CONSOLE.print(
        f"{result.pairing}: [bold]{result.bits:.4f}[/bold] ± {result.std_bits:.4f} bits "
        f"at K_Est={result.K_est} (bound {result.bound_bits:.4f})"
    )
    if result.theorem_status is not None:
        CONSOLE.print(
            f"H(C) = {result.class_entropy_bits:.1f} bits: {result.theorem_status.value}"
        )
    if not honesty.passed:
        CONSOLE.print(
            f"[yellow]Held-out estimate exceeds the training envelope by "
            f"{honesty.excess_bits:.4f} bits[/yellow]"
        )
    if not bound.passed:
        CONSOLE.print(f"[red]Bound violated by {-bound.margin:.6f} bits[/red]")
        ctx.exit(1)


@cli.command()
@option("--ckpt", type=FILE, required=True)
@option("--data", type=ClickPath(path_type=Path), required=True)
@option("--task", default="all", show_default=True)
@option("--out", type=FILE, required=True)
def metrics(ckpt: Path, data: Path, task: str, out: Path):
    """Probe accuracy and hypersphere metrics for one task."""
    report = metric_report(load_checkpoint(ckpt), read_packed(data), TaskSpec.parse(task))
    out.write_text(report.model_dump_json(indent=2) + "\n")
    CONSOLE.print(report.model_dump())


@cli.command()
@option("--csv", "csv_path", type=FILE, required=True)
@option("--x", "x", default="accuracy", show_default=True)
@option("--y", "y", default="mi_bits", show_default=True)
@pass_context
def corr(ctx: Context, csv_path: Path, x: str, y: str):
    """Pearson and Kendall tau-b between two columns of a results CSV."""
    frame = pd.read_csv(csv_path)
    x, y = COLUMN_ALIASES.get(x, x), COLUMN_ALIASES.get(y, y)
    missing = [column for column in (x, y) if column not in frame.columns]
    if missing:
        CONSOLE.print(f"[red]Columns {missing} not in {csv_path}[/red]")
        ctx.exit(2)
    rows = frame[[x, y]].dropna()
    try:
        rho, tau = pearson(rows[x], rows[y]), kendall_tau(rows[x], rows[y])
    except ValueError as exc:
        CONSOLE.print(f"[red]{exc}[/red]")
        ctx.exit(1)
    CONSOLE.print(f"n={len(rows)}  pearson={rho:.4f}  kendall={tau:.4f}")


def _scenario_command(name: str, runner: Callable[..., RunReport], summary: str):
    @cli.command(name=name, help=summary)
    @option("--config", "config_path", type=FILE, default=DEFAULT_CONFIG_FILE)
    @option("--out", type=DIRECTORY, default=None)
    @pass_context
    def command(ctx: Context, config_path: Path, out: Path | None):
        config = get_config(config_path)
        report = runner(config)
        scenario = report.scenario
        directory = out or (config.output_dir or Path("runs")) / scenario
        emit_report(report, directory)
        _print_report(report)
        if not report.valid:
            for failure in report.failures:
                CONSOLE.print(f"[red]{failure}[/red]")
            ctx.exit(1)

    return command


_scenario_command("case1", run_case_batch_size, "Training vs post-training MI over K_Tr.")
_scenario_command("infomin", run_case_infomin, "Accuracy and MI over augmentation strength.")
_scenario_command("grid", run_task_grid, "Pairing task x probe task matrices.")
_scenario_command("negsample", run_negative_sampling, "Negatives drawn from D⁻ datasets.")
_scenario_command("temperature", run_temperature_sweep, "Metrics over temperatures.")


def _print_report(report: RunReport) -> None:
    frame = report.frame().dropna(axis=1, how="all")
    table = Table(title=f"{report.scenario} ({len(frame)} rows)")
    for column in frame.columns:
        table.add_column(column)
    for record in frame.itertuples(index=False):
        table.add_row(
            *(f"{v:.4f}" if isinstance(v, float) else str(v) for v in record)
        )
    CONSOLE.print(table)
    for key, value in report.findings.items():
        CONSOLE.print(f"[bold]{key}[/bold]: {value}")


def _dataset(config: SweepConfig, data: Path | None) -> CdpDataset:
    return read_packed(data) if data is not None else load_dataset(config.dataset)


def get_config(path: Path | str = DEFAULT_CONFIG_FILE) -> SweepConfig:
    config_raw = Path(path).expanduser().read_text()
    return SweepConfig.model_validate(toml_loads(config_raw))
