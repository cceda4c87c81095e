"""``scale``: per-step trace of the BL scaling iteration."""

from __future__ import annotations

from typing import Any, Dict, List

import click

from ..errors import SingularMatrix
from ..models.datum import BLScalingTrace
from ..services.file_formats import dump_csv, dump_json_line, load_datum
from .common import ExitCode, handle_errors, services_from_context


def trace_rows(trace: BLScalingTrace) -> List[Dict[str, Any]]:
    """One row per step: ``step``, ``g`` and the BL estimate where one was checkpointed."""

    estimates = dict(trace.bl_estimates)
    return [
        {"step": step, "g": g, "bl_estimate": estimates.get(step)}
        for step, g in enumerate(trace.g_history)
    ]


def _print_rows(rows: List[Dict[str, Any]], output_format: str) -> None:
    if output_format == "csv":
        click.echo(dump_csv(rows), nl=False)
        return
    for row in rows:
        if output_format == "human":
            click.echo("  ".join(f"{key}={value}" for key, value in row.items()))
        else:
            click.echo(dump_json_line(row))


@click.command("scale")
@click.argument("datum_path", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def scale_command(ctx: click.Context, datum_path: str) -> None:
    """Stream (step, g, bl_estimate) rows; exits 3 on a singular normalization."""

    services = services_from_context(ctx)
    config = services.config
    datum = load_datum(datum_path)

    try:
        trace = services.brascamp_lieb.bl_scaling(datum, config.max_steps, config.g_target)
    except SingularMatrix as exc:
        row: Dict[str, Any] = {
            "step": exc.step,
            "g": None,
            "bl_estimate": None,
            "event": "singular normalization",
            "index": exc.index,
        }
        if config.output_format != "csv" and exc.witness is not None:
            row["witness"] = [list(column) for column in exc.witness.columns()]
        _print_rows([row], config.output_format)
        raise click.exceptions.Exit(int(ExitCode.NEGATIVE))

    rows = trace_rows(trace)
    if config.trace and config.output_format != "csv":
        rows.append(
            {
                "event": "final factors",
                "steps": trace.steps,
                "final_g": trace.final_g,
                "right_factor": trace.right_factor,
                "left_factors": list(trace.left_factors),
            }
        )
    _print_rows(rows, config.output_format)
    if not trace.converged:
        raise click.exceptions.Exit(int(ExitCode.INCONCLUSIVE))


__all__ = ["scale_command", "trace_rows"]
