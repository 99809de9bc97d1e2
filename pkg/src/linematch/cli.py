"""Command line interface: generate, run, verify, experiment."""

from __future__ import annotations

import json
import sys

import click

from .bench import generate, load_config, run_experiment, write_csv
from .core import (
    format_scalar,
    instance_to_json_dict,
    load_instance,
    parse_scalar,
    save_instance,
)
from .engine import export_trace, run_online
from .offline import optimal_cost
from .verify import final_ratio_check, full_report


@click.group()
def main():
    """Online matching on a line: engine, verification, benchmarks."""


@main.command("gen")
@click.option("--kind", required=True,
              type=click.Choice(["uniform", "perturbed-permutation",
                                 "cluster-gap"]))
@click.option("--n", "n", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--t", "t_value", default="3", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def gen_command(kind, n, seed, t_value, out):
    """Write a generated instance to a JSON file."""
    instance = generate(kind, n, seed, t=parse_scalar(t_value))
    save_instance(instance, out)
    click.echo(f"wrote {kind} instance n={n} seed={seed} to {out}")


@main.command("run")
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--emit-trace", "trace_path", default=None,
              type=click.Path(dir_okay=False))
@click.option("--t", "t_value", default=None,
              help="Override the instance's t parameter.")
def run_command(instance_path, trace_path, t_value):
    """Process all arrivals and print the run summary."""
    instance = load_instance(instance_path)
    t = parse_scalar(t_value) if t_value is not None else None
    trace = run_online(instance, t=t)
    ratio, normalized = final_ratio_check(trace)
    summary = {
        "n": trace.n,
        "t": format_scalar(trace.t),
        "w_online": format_scalar(trace.w_online),
        "w_opt": format_scalar(optimal_cost(instance)),
        "ratio": format_scalar(ratio),
        "ratio_normalized": normalized,
        "short_edges": sum(1 for p in trace.phases if p.short),
        "long_edges": sum(1 for p in trace.phases if not p.short),
    }
    if trace_path is not None:
        export_trace(trace, trace_path)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command("verify")
@click.option("--instance", "instance_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--t", "t_value", default=None)
@click.option("--out", "out_path", default=None,
              type=click.Path(dir_okay=False))
def verify_command(instance_path, t_value, out_path):
    """Run the engine and the full check suite; nonzero exit on failure."""
    instance = load_instance(instance_path)
    t = parse_scalar(t_value) if t_value is not None else None
    trace = run_online(instance, t=t)
    report = full_report(trace)
    ratio, normalized = final_ratio_check(trace)
    payload = {
        "instance": instance_to_json_dict(instance),
        "n": trace.n,
        "t": format_scalar(trace.t),
        "w_online": format_scalar(trace.w_online),
        "w_opt": format_scalar(optimal_cost(instance)),
        "ratio": format_scalar(ratio),
        "ratio_normalized": normalized,
        "passed": report.passed,
        "checks": [c.to_json_dict() for c in report.checks],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    click.echo(text)
    if not report.passed:
        sys.exit(1)


@main.command("experiment")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def experiment_command(config_path, out):
    """Run a seeded experiment grid and write the results CSV."""
    config = load_config(config_path)
    rows = run_experiment(config)
    write_csv(rows, out)
    click.echo(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
