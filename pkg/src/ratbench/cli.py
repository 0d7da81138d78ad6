"""ratbench command line: simulate, fit, report, compare, serve."""
from __future__ import annotations

import json
import os
import sys

import click

from .errors import RatbenchError
from .models import builtin_model, fit_model, load_model, load_table_cells, save_model
from .policy import load_policy
from .records import Technology, write_jsonl
from .report import render_cells
from .simulate import (
    compare_policies,
    load_campaign_config,
    load_workload,
    run_campaign,
)
from .store import DEFAULT_MIN_SAMPLES, RecordStore, aggregate_table, speed_series


def _load_models(model_path: str | None):
    return load_model(model_path) if model_path else builtin_model()


@click.group()
@click.version_option(package_name="ratbench")
def main() -> None:
    """Multi-RAT LPWAN measurement toolkit: model fitting, campaign
    simulation, report generation, policy what-ifs, and an ingest service."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Campaign config JSON.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output records JSON Lines file.")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Fitted model JSON; defaults to the shipped-table fit.")
@click.option("--events", "events_path", type=click.Path(), default=None,
              help="Also write the event log as JSON Lines.")
def simulate(config_path, seed, out_path, model_path, events_path) -> None:
    """Replay the monitoring campaign and write measurement records."""
    try:
        cfg = load_campaign_config(config_path)
        models = _load_models(model_path)
        result = run_campaign(cfg, models, seed=seed)
        write_jsonl(result.records, out_path)
        if events_path:
            with open(events_path, "w", encoding="utf-8") as fh:
                for event in result.events:
                    fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        click.echo(
            f"wrote {len(result.records)} records (seed {result.seed}, "
            f"report overhead {result.overhead_energy_uwh:.1f} uWh) to {out_path}"
        )
    except RatbenchError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--targets", "targets_path", type=click.Path(exists=True), default=None,
              help="Comparison-table targets JSON; defaults to the shipped table.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output model JSON.")
def fit(targets_path, out_path) -> None:
    """Fit per-technology power profiles to energy-per-byte targets."""
    try:
        cells = load_table_cells(targets_path)
        model = fit_model(cells)
        save_model(model, out_path)
        n_profiles = sum(len(v) for v in model.energy_by_scenario.values())
        click.echo(f"fitted {n_profiles} technology/scenario profiles to {out_path}")
    except RatbenchError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Records JSON Lines file.")
@click.option("--delivered-only", is_flag=True, default=False,
              help="Average energy over delivered packets only.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "md"]), default="csv")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the table here instead of stdout.")
@click.option("--figures", "figures_dir", type=click.Path(), default=None,
              help="Directory for rendered figures (defaults next to --out).")
@click.option("--no-figures", is_flag=True, default=False, help="Skip figure rendering.")
@click.option("--min-samples", type=int, default=DEFAULT_MIN_SAMPLES, show_default=True)
def report(in_path, delivered_only, fmt, out_path, figures_dir, no_figures, min_samples) -> None:
    """Aggregate records into the comparison table, with figures."""
    try:
        store = RecordStore(in_path)
        cells = aggregate_table(
            store, min_samples=min_samples, delivered_only=delivered_only
        )
        rendered = render_cells(cells, fmt)
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(rendered)
            click.echo(f"wrote {len(cells)} cells to {out_path}")
        else:
            click.echo(rendered, nl=False)

        if figures_dir is None and out_path:
            figures_dir = os.path.dirname(os.path.abspath(out_path))
        if figures_dir and not no_figures:
            from . import figures

            os.makedirs(figures_dir, exist_ok=True)
            written = [
                figures.render_eb_bars(cells, os.path.join(figures_dir, "eb_by_bucket.png")),
                figures.render_pdr_bars(cells, os.path.join(figures_dir, "pdr_by_bucket.png")),
            ]
            speed = {
                tech: speed_series(store, tech) for tech in Technology
            }
            if any(len(s) > 1 for s in speed.values()):
                written.append(
                    figures.render_speed_lines(
                        speed, os.path.join(figures_dir, "pdr_vs_speed.png")
                    )
                )
            click.echo("figures: " + ", ".join(written), err=True)
    except RatbenchError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--workload", "workload_path", required=True, type=click.Path(exists=True))
@click.option("--policy-a", "policy_a_path", required=True, type=click.Path(exists=True))
@click.option("--policy-b", "policy_b_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
def compare(workload_path, policy_a_path, policy_b_path, seed, model_path) -> None:
    """Run one workload under two policies with common random numbers."""
    try:
        workload = load_workload(workload_path)
        policy_a = load_policy(policy_a_path)
        policy_b = load_policy(policy_b_path)
        models = _load_models(model_path)
        comparison = compare_policies(workload, policy_a, policy_b, models, seed)
        click.echo(json.dumps(comparison.as_json(), indent=2))
    except RatbenchError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option("--addr", default="127.0.0.1:8080", show_default=True,
              help="host:port to bind.")
@click.option("--data", "data_dir", required=True, type=click.Path(),
              help="Dataset directory (records.jsonl lives here).")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
def serve(addr, data_dir, model_path) -> None:
    """Run the ingestion + query HTTP service."""
    from .service import IngestService

    try:
        host, _, port_text = addr.partition(":")
        service = IngestService(
            data_dir=data_dir,
            addr=host or "127.0.0.1",
            port=int(port_text or "8080"),
            models=_load_models(model_path),
        )
    except (ValueError, RatbenchError) as exc:
        raise click.ClickException(str(exc)) from exc
    bound_host, bound_port = service.address
    click.echo(f"serving on http://{bound_host}:{bound_port} (data: {data_dir})")
    try:
        service.serve_forever()
    except KeyboardInterrupt:  # pragma: no cover - interactive
        service.shutdown()
        sys.exit(0)


if __name__ == "__main__":
    main()
