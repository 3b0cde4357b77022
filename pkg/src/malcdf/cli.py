"""Command-line entry point binding all modules for headless use.

Every command is non-interactive, prints data to stdout and errors to
stderr, and exits 0 on success or 2 with a stable error code on failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import coordinator as co
from . import evaluation as ev
from .agents import DelayedProvider, ProviderConfig, ProviderKind, make_provider
from .baseline import (
    TrainConfig,
    check_leakage,
    load_model,
    predict_dataset,
    save_model,
    single_llm_run,
    train_forest,
)
from .errors import LeakageDetected, MalcdfError
from .events import DatasetSource, StreamConfig, parse_dataset
from .fixtures import load_fixture


def _fail(e: MalcdfError) -> None:
    click.echo(f"{e.code}: {e.message}", err=True)
    sys.exit(2)


def _provider_config(provider: str, endpoint: Optional[str]) -> ProviderConfig:
    return ProviderConfig(kind=ProviderKind(provider.upper()), endpoint_url=endpoint)


def _summary_metrics(summary: co.RunSummary, truth: list[bool]) -> tuple[ev.MetricsReport, ev.SeverityDistribution]:
    completed = [r for r in summary.results if r.completed and r.consensus]
    aligned_truth = [truth[r.event_id - 1] for r in completed]
    matrix = ev.confusion([r.consensus.final_is_attack for r in completed], aligned_truth)
    report = ev.compute_metrics(
        matrix,
        [r.consensus.final_confidence for r in completed],
        [r.latency_ms for r in completed],
        n_excluded=len(summary.results) - len(completed),
    )
    return report, ev.severity_distribution(completed, aligned_truth)


def _emit_run(summary: co.RunSummary, truth: list[bool], out: Optional[str], label: str) -> None:
    report, distribution = _summary_metrics(summary, truth)
    text, _doc = ev.comparison_report([(label, report)])
    click.echo(text)
    click.echo(f"severity over true positives: "
               f"{ {s.value: c for s, c in distribution.severity_counts.items()} }")
    if out:
        Path(out).write_text(json.dumps({
            "summary": summary.to_dict(),
            "metrics": report.to_dict(),
            "severity_distribution": distribution.to_dict(),
        }, sort_keys=True, indent=2), encoding="utf-8")
        click.echo(f"wrote {out}")


@click.group()
def main() -> None:
    """Coordinated multi-agent cyber-defense pipeline."""


@main.command()
@click.option("--records", default=50, show_default=True)
@click.option("--attacks", default=17, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--provider", default="rules", type=click.Choice(["scripted", "rules", "remote"]))
@click.option("--fixture", default=None, help="Use a shipped fixture bundle instead of a generated stream.")
@click.option("--delay", "delay_ms", default=0, help="Inter-event delay in ms.")
@click.option("--stage-delay", "stage_delay_ms", default=0, help="Injected per-stage provider delay in ms.")
@click.option("--endpoint", default=None, help="Remote provider endpoint URL.")
@click.option("--audit-out", default=None, help="Audit log JSONL path.")
@click.option("--out", default=None, help="Run summary JSON path.")
def simulate(records, attacks, seed, provider, fixture, delay_ms, stage_delay_ms,
             endpoint, audit_out, out):
    """Run the live-stream simulation end to end and print metrics."""
    try:
        if fixture:
            bundle = load_fixture(fixture)
            p = make_provider(_provider_config(provider, endpoint), bundle.scripted)
            if stage_delay_ms:
                p = DelayedProvider(p, stage_delay_ms)
            summary = co.run(bundle.dataset, co.RunMode.DATASET, p,
                             indicators=bundle.indicators, audit_path=audit_out)
            _emit_run(summary, bundle.truth, out, "Coordinated")
        else:
            config = StreamConfig(total_records=records, attack_records=attacks, seed=seed,
                                  inter_event_delay_ms=delay_ms)
            p = make_provider(_provider_config(provider, endpoint))
            if stage_delay_ms:
                p = DelayedProvider(p, stage_delay_ms)
            summary = co.run(config, co.RunMode.SIMULATION, p, audit_path=audit_out)
            from .events import generate_dataset

            truth = [bool(r.label and r.label.is_attack)
                     for r in generate_dataset(config).records]
            _emit_run(summary, truth, out, "Coordinated")
    except MalcdfError as e:
        _fail(e)


@main.command()
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", default="rules", type=click.Choice(["scripted", "rules", "remote"]))
@click.option("--fixture", default=None, help="Scripted fixture bundle supplying agent outputs.")
@click.option("--endpoint", default=None)
@click.option("--audit-out", default=None)
@click.option("--out", default=None)
def batch(input_csv, provider, fixture, endpoint, audit_out, out):
    """Batch-analyze a CSV of flow records through the full agent flow."""
    try:
        dataset = parse_dataset(Path(input_csv).read_bytes(), DatasetSource.UPLOAD)
        scripted = load_fixture(fixture).scripted if fixture else None
        p = make_provider(_provider_config(provider, endpoint), scripted)
        summary = co.run(dataset, co.RunMode.BATCH, p, audit_path=audit_out)
        truth = [bool(r.label and r.label.is_attack) for r in dataset.records]
        _emit_run(summary, truth, out, "Coordinated")
    except MalcdfError as e:
        _fail(e)


@main.command("train-baseline")
@click.argument("train_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--model-out", required=True)
@click.option("--trees", default=50, show_default=True)
@click.option("--depth", default=8, show_default=True)
@click.option("--min-leaf", default=2, show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_baseline(train_csv, model_out, trees, depth, min_leaf, seed):
    """Train the random-forest baseline and write a model file."""
    try:
        dataset = parse_dataset(Path(train_csv).read_bytes(), DatasetSource.UPLOAD)
        config = TrainConfig(n_trees=trees, max_depth=depth, min_leaf=min_leaf, seed=seed)
        model = train_forest(dataset, config)
        save_model(model, model_out)
        click.echo(f"trained {trees} trees on {len(dataset.records)} records -> {model_out}")
    except MalcdfError as e:
        _fail(e)


@main.command("run-baseline")
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("test_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, help="Metrics report JSON path.")
def run_baseline(model_file, test_csv, out):
    """Evaluate a trained baseline model on a labeled test CSV."""
    try:
        model = load_model(model_file)
        dataset = parse_dataset(Path(test_csv).read_bytes(), DatasetSource.UPLOAD)
        overlap = check_leakage(model, dataset)
        if overlap:
            raise LeakageDetected(f"test records seen in training: events {overlap}")
        predictions = predict_dataset(model, dataset)
        truth = [bool(r.label and r.label.is_attack) for r in dataset.records]
        matrix = ev.confusion([p for p, _ in predictions], truth)
        report = ev.compute_metrics(matrix)
        text, _ = ev.comparison_report([("ML-IDS", report)])
        click.echo(text)
        if out:
            Path(out).write_text(ev.dump_report(report), encoding="utf-8")
            click.echo(f"wrote {out}")
    except MalcdfError as e:
        _fail(e)


@main.command("single-llm")
@click.option("--fixture", default="paper", show_default=True)
@click.option("--provider", default="scripted", type=click.Choice(["scripted", "rules", "remote"]))
@click.option("--endpoint", default=None)
@click.option("--out", default=None)
def single_llm(fixture, provider, endpoint, out):
    """Run the single-model baseline (no secure channel, no consensus)."""
    try:
        bundle = load_fixture(fixture)
        p = make_provider(_provider_config(provider, endpoint), bundle.scripted)
        predictions = single_llm_run(bundle.dataset, p)
        decided = [(p_, t) for p_, t in zip(predictions, bundle.truth) if p_ is not None]
        matrix = ev.confusion([p_ for p_, _ in decided], [t for _, t in decided])
        report = ev.compute_metrics(matrix, n_excluded=len(predictions) - len(decided))
        text, _ = ev.comparison_report([("Single Model", report)])
        click.echo(text)
        if out:
            Path(out).write_text(ev.dump_report(report), encoding="utf-8")
            click.echo(f"wrote {out}")
    except MalcdfError as e:
        _fail(e)


@main.command()
@click.argument("predictions_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None)
def evaluate(predictions_file, truth_file, out):
    """Compute metrics from line-delimited 0/1 prediction and truth files."""
    try:
        def read_bools(path):
            return [line.strip() not in ("0", "false", "False")
                    for line in Path(path).read_text().splitlines() if line.strip()]

        matrix = ev.confusion(read_bools(predictions_file), read_bools(truth_file))
        report = ev.compute_metrics(matrix)
        text, _ = ev.comparison_report([("Evaluation", report)])
        click.echo(text)
        if out:
            Path(out).write_text(ev.dump_report(report), encoding="utf-8")
    except MalcdfError as e:
        _fail(e)


@main.command()
@click.argument("report_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", default=None, help="Comma-separated column labels.")
@click.option("--out", default=None, help="Machine-readable comparison document path.")
def compare(report_files, labels, out):
    """Render a side-by-side comparison table from metrics report files."""
    names = labels.split(",") if labels else [Path(f).stem for f in report_files]
    if len(names) != len(report_files):
        click.echo("label count does not match report count", err=True)
        sys.exit(2)
    try:
        reports = []
        for name, path in zip(names, report_files):
            try:
                reports.append((name, ev.load_report(Path(path).read_text())))
            except (ValueError, KeyError) as e:
                click.echo(f"MALFORMED_REPORT: {path}: {e}", err=True)
                sys.exit(2)
        text, document = ev.comparison_report(reports)
        click.echo(text)
        if out:
            Path(out).write_text(json.dumps(document, sort_keys=True, indent=2),
                                 encoding="utf-8")
    except MalcdfError as e:
        _fail(e)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8741, show_default=True)
@click.option("--audit-dir", default=None, help="Directory for per-run audit JSONL files.")
@click.option("--token", default=None, help="Static bearer token (default: MALCDF_API_TOKEN env).")
def serve(host, port, audit_dir, token):
    """Host the operator HTTP service."""
    import uvicorn

    from .service import RunManager, create_app

    app = create_app(RunManager(audit_dir=audit_dir), bearer_token=token)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as e:
        click.echo(f"SERVE_FAILED: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
