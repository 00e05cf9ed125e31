"""Command-line entry point ``eqshadow``."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .bench import BudgetError, ExperimentSpec, builtin_spec, row_passes, run_experiment
from .eqcore import EquatorialLabel
from .synth import depth_and_counts, espovm_measurement_circuit


def _run(spec: ExperimentSpec, workers: int, out: str | None, long: bool) -> None:
    try:
        result = run_experiment(spec, workers=workers, out=out, long=long)
    except BudgetError as exc:
        raise click.ClickException(str(exc)) from exc
    except OSError as exc:
        raise click.ClickException(f"cannot write results: {exc}") from exc
    failed = [r for r in result.rows if row_passes(r) is False]
    click.echo(f"{spec.kind}: {len(result.rows)} rows -> {result.csv_path}")
    for row in failed:
        click.echo(f"FAIL {row.experiment} {json.dumps(row.params, sort_keys=True)} value={row.estimate!r}")
    if not result.ok:
        sys.exit(1)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Equatorial-stabilizer shadow tomography experiments."""


@main.command()
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
@click.option("--workers", type=int, default=1, show_default=True, help="Worker threads.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--long", "long_", is_flag=True, help="Allow specs over the default time budget.")
def run(spec_path: str, seed: int | None, workers: int, out: str | None, long_: bool) -> None:
    """Run the experiment described by SPEC_PATH (JSON)."""
    try:
        spec = ExperimentSpec.from_json(spec_path)
        if seed is not None:
            spec = replace(spec, seed=seed)
    except (ValueError, TypeError) as exc:
        raise click.ClickException(f"invalid spec: {exc}") from exc
    _run(spec, workers, out, long_)


@main.command()
@click.argument("suite", type=click.Choice(["moments", "ic", "synth"]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="results", show_default=True)
@click.option("--long", "long_", is_flag=True, help="Allow suites over the default time budget.")
def verify(suite: str, seed: int, workers: int, out: str, long_: bool) -> None:
    """Run a built-in oracle suite; exits nonzero on any failed check."""
    _run(builtin_spec(suite, seed), workers, out, long_)


@main.command()
@click.option("--label", "label_text", required=True, help="Label in the form eq:n:diag:off.")
@click.option("--lnn", is_flag=True, help="Compile for nearest-neighbour CNOTs on a line.")
@click.option("--alternative", is_flag=True, help="Fold the diagonal phases into X/Y measurements.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write circuit.txt and counts.json here.")
def synth(label_text: str, lnn: bool, alternative: bool, out: str | None) -> None:
    """Emit the measurement circuit of a label and its resource counts."""
    try:
        label = EquatorialLabel.from_text(label_text)
    except ValueError as exc:
        raise click.ClickException(f"invalid label: {exc}") from exc
    circuit = espovm_measurement_circuit(label, alternative=alternative, lnn=lnn)
    report = dict(label=label.to_text(), lnn=lnn, alternative=alternative, **depth_and_counts(circuit))
    text = circuit.to_text()
    counts = json.dumps(report, indent=2, sort_keys=True)
    if out is None:
        click.echo(text.rstrip("\n"))
        click.echo(counts)
        return
    directory = Path(out)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "circuit.txt").write_text(text, encoding="utf-8")
        (directory / "counts.json").write_text(counts + "\n", encoding="utf-8")
    except OSError as exc:
        raise click.ClickException(f"cannot write results: {exc}") from exc
    click.echo(f"wrote {directory / 'circuit.txt'} and {directory / 'counts.json'}")


if __name__ == "__main__":
    main()
